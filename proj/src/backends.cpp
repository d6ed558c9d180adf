#include "darag/backends.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "darag/instruction.hpp"

namespace darag {

using nlohmann::json;

void BackendConfig::validate() const {
    if (decoding.temperature < 0) throw Error("backends: temperature must be >= 0");
    if (decoding.top_p <= 0 || decoding.top_p > 1) throw Error("backends: top_p must be in (0,1]");
    if (decoding.beam_size == 0) throw Error("backends: beam_size must be >= 1");
    if (kind == BackendKind::http && endpoint.empty())
        throw Error("backends: http backend requires an endpoint");
    if (retry_limit < 1) throw Error("backends: retry_limit must be >= 1");
}

void MockErrorChannel::validate() const {
    for (double r : {substitution_rate, deletion_rate, insertion_rate})
        if (r < 0 || r > 1) throw Error("backends: channel rates must be in [0,1]");
    if (substitution_rate + deletion_rate + insertion_rate > 1.0)
        throw Error("backends: channel rates must sum to at most 1");
    if (hard_error_fraction < 0 || hard_error_fraction > 1)
        throw Error("backends: hard_error_fraction must be in [0,1]");
}

// ---------------------------------------------------------------------------
// Mock text generator
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kExamplesMarker = "one in each line:";
constexpr const char* kExamplesEnd = ". Return a JSON";

std::vector<std::string> extract_prompt_examples(const std::string& prompt) {
    auto start = prompt.find(kExamplesMarker);
    if (start == std::string::npos)
        throw Error("backends: prompt has no example section");
    start += std::string(kExamplesMarker).size();
    auto end = prompt.rfind(kExamplesEnd);
    if (end == std::string::npos || end < start)
        throw Error("backends: prompt has no closing section");
    std::vector<std::string> examples;
    std::istringstream in(prompt.substr(start, end - start));
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) examples.push_back(line);
    if (examples.empty()) throw Error("backends: prompt contains no examples");
    return examples;
}

std::string two_transcript_json(const std::string& first, const std::string& second) {
    json j;
    j["First Transcript"] = first;
    j["Second Transcript"] = second;
    return j.dump();
}

}  // namespace

std::string MockTextGenerator::generate_text(const std::string& prompt) {
    calls_.fetch_add(1);
    auto examples = extract_prompt_examples(prompt);

    // Bigram recombination over the example tokens, with random jumps so
    // generations mix material across examples instead of replaying one.
    std::vector<std::string> vocab;
    std::map<std::string, std::vector<std::string>> successors;
    double total_len = 0;
    for (const auto& ex : examples) {
        auto toks = tokenize(ex);
        total_len += static_cast<double>(toks.size());
        for (std::size_t i = 0; i < toks.size(); ++i) {
            vocab.push_back(toks[i]);
            if (i + 1 < toks.size()) successors[toks[i]].push_back(toks[i + 1]);
        }
    }
    if (vocab.empty()) throw Error("backends: prompt examples are empty");
    double avg_len = total_len / static_cast<double>(examples.size());

    std::mt19937_64 rng(derive_seed(seed_, prompt));
    auto generate_one = [&]() {
        std::size_t target = static_cast<std::size_t>(
            std::clamp(avg_len + static_cast<double>(next_below(rng, 5)) - 2.0, 4.0, 14.0));
        std::vector<std::string> out;
        std::string current = vocab[next_below(rng, vocab.size())];
        out.push_back(current);
        while (out.size() < target) {
            auto it = successors.find(current);
            bool jump = it == successors.end() || it->second.empty() || next_unit(rng) < 0.35;
            if (jump)
                current = vocab[next_below(rng, vocab.size())];
            else
                current = it->second[next_below(rng, it->second.size())];
            out.push_back(current);
        }
        return join_tokens(out);
    };
    std::string first = generate_one();
    std::string second = generate_one();
    return two_transcript_json(first, second);
}

std::string CopyAttackGenerator::generate_text(const std::string& prompt) {
    auto examples = extract_prompt_examples(prompt);
    const std::string& first = examples.front();
    const std::string& second = examples.size() > 1 ? examples[1] : examples.front();
    return two_transcript_json(first, second);
}

// ---------------------------------------------------------------------------
// Mock synthesizer / transcriber
// ---------------------------------------------------------------------------

std::string MockSpeechSynthesizer::synthesize_speech(const std::string& transcript,
                                                     const std::string& style_ref) {
    if (style_ref.empty()) throw Error("backends: conditioning utterance required");
    if (transcript.empty()) throw Error("backends: empty transcript");
    calls_.fetch_add(1);
    return std::string(kMockAudioPrefix) + transcript;
}

namespace {

// Character-level misspelling for tokens without a confusion-table entry,
// mimicking phoneme-level ASR errors ("spyware" -> "spygware").
std::string mangle_token(const std::string& token, std::mt19937_64& rng) {
    static const char* letters = "abcdefghijklmnopqrstuvwxyz";
    std::string out = token;
    std::size_t pos = next_below(rng, out.size() + 1);
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), letters[next_below(rng, 26)]);
    return out;
}

struct TokenPlan {
    bool substituted = false;
    bool hard = false;
    bool deleted = false;
    bool inserted_after = false;
};

}  // namespace

TranscriptionResult MockTranscriber::transcribe(const std::string& audio_ref) {
    calls_.fetch_add(1);
    if (audio_ref.rfind(kMockAudioPrefix, 0) != 0)
        throw Error("backends: undecodable audio ref '" + audio_ref + "'");
    std::string transcript = audio_ref.substr(std::string(kMockAudioPrefix).size());
    auto tokens = tokenize(transcript);

    // Utterance-level plan: which tokens are unreliable at all. Shared across
    // the beam so hypotheses disagree about the same positions, like a real
    // beam does.
    std::uint64_t utt_seed = derive_seed(channel_.seed, audio_ref);
    std::mt19937_64 plan_rng(utt_seed);
    std::vector<TokenPlan> plan(tokens.size());
    for (auto& p : plan) {
        double r = next_unit(plan_rng);
        double r_mode = next_unit(plan_rng);
        double r_del = next_unit(plan_rng);
        double r_ins = next_unit(plan_rng);
        p.substituted = r < channel_.substitution_rate;
        p.hard = p.substituted && r_mode < channel_.hard_error_fraction;
        p.deleted = !p.substituted && r_del < channel_.deletion_rate;
        p.inserted_after = r_ins < channel_.insertion_rate;
    }

    struct Draw {
        std::vector<std::string> tokens;
        std::size_t corruption = 0;
        std::size_t index = 0;
    };
    std::vector<Draw> draws(beam_size_);
    for (std::size_t j = 0; j < beam_size_; ++j) {
        std::mt19937_64 rng(derive_seed(utt_seed ^ 0x7a5cULL, j));
        Draw& draw = draws[j];
        draw.index = j;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const TokenPlan& p = plan[i];
            if (p.substituted && (p.hard || next_unit(rng) < 0.5)) {
                auto it = channel_.confusion_table.find(tokens[i]);
                if (it != channel_.confusion_table.end() && !it->second.empty())
                    draw.tokens.push_back(it->second[next_below(rng, it->second.size())]);
                else
                    draw.tokens.push_back(mangle_token(tokens[i], rng));
                ++draw.corruption;
            } else if (p.deleted && next_unit(rng) < 0.5) {
                ++draw.corruption;
            } else {
                draw.tokens.push_back(tokens[i]);
            }
            if (p.inserted_after && next_unit(rng) < 0.5) {
                draw.tokens.push_back(tokens[next_below(rng, tokens.size())]);
                ++draw.corruption;
            }
        }
        if (draw.tokens.empty()) draw.tokens.push_back(tokens.empty() ? "" : tokens[0]);
    }
    std::stable_sort(draws.begin(), draws.end(),
                     [](const Draw& a, const Draw& b) { return a.corruption < b.corruption; });

    TranscriptionResult result;
    for (const auto& draw : draws) {
        result.hypotheses.push_back(join_tokens(draw.tokens));
        result.scores.push_back(-static_cast<double>(draw.corruption));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Mock embedder
// ---------------------------------------------------------------------------

std::vector<std::vector<double>> MockEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        auto tokens = tokenize(text);
        if (tokens.empty()) throw Error("backends: cannot embed empty text");
        std::vector<double> vec(dim_, 0.0);
        for (const auto& tok : tokens) {
            std::uint64_t base = splitmix64(fnv1a(tok) ^ splitmix64(seed_));
            for (std::size_t d = 0; d < dim_; ++d) {
                std::uint64_t h = splitmix64(base + d);
                // map to [-1, 1)
                vec[d] += static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
            }
        }
        out.push_back(std::move(vec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gazetteer tagger
// ---------------------------------------------------------------------------

GazetteerTagger::GazetteerTagger(std::map<std::string, std::string> lexicon) {
    NormalizationPolicy policy;
    for (auto& [surface, type] : lexicon) {
        std::string key = policy.apply(surface);
        if (key.empty()) continue;
        max_words_ = std::max(max_words_, tokenize(key).size());
        lexicon_.emplace(std::move(key), type);
    }
}

std::vector<std::pair<std::string, std::string>> GazetteerTagger::tag(const std::string& text) {
    auto tokens = tokenize(text);
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t i = 0;
    while (i < tokens.size()) {
        bool matched = false;
        std::size_t longest = std::min(max_words_, tokens.size() - i);
        for (std::size_t len = longest; len >= 1; --len) {
            std::string span = join_tokens(
                std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + len));
            auto it = lexicon_.find(span);
            if (it != lexicon_.end()) {
                out.emplace_back(it->second, span);
                i += len;
                matched = true;
                break;
            }
        }
        if (!matched) ++i;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Oracle corrector
// ---------------------------------------------------------------------------

OracleCorrector::OracleCorrector(
    const std::map<std::string, std::vector<std::string>>& confusion_table) {
    for (const auto& [token, confusables] : confusion_table) {
        for (const auto& c : confusables) {
            confusables_[token].push_back(c);
            confusables_[c].push_back(token);
        }
    }
}

namespace {

std::size_t char_edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1), prev[j] + 1,
                               cur[j - 1] + 1});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

std::string OracleCorrector::correct(const std::string& instruction) {
    if (instruction.empty()) throw Error("backends: empty instruction");
    calls_.fetch_add(1);
    ParsedInstruction parsed = parse_instruction(instruction);

    auto best = tokenize(parsed.best_hypothesis);
    std::vector<std::string> ne_tokens;  // in retrieval order
    std::set<std::string> ne_token_set;
    for (const auto& surface : parsed.named_entities)
        for (const auto& tok : tokenize(surface)) {
            if (ne_token_set.insert(tok).second) ne_tokens.push_back(tok);
        }
    std::vector<std::string> other_tokens;  // hypothesis order, then position
    std::map<std::string, std::size_t> other_counts;
    for (const auto& hyp : parsed.other_hypotheses)
        for (const auto& tok : tokenize(hyp)) {
            other_tokens.push_back(tok);
            ++other_counts[tok];
        }
    // A token repeated across most other hypotheses is treated as agreed-on;
    // one-off variants are beam noise.
    std::size_t vote_needed = parsed.other_hypotheses.size() >= 2 ? 2 : 1;

    auto in_conf = [&](const std::string& x, const std::string& y) {
        auto it = confusables_.find(x);
        return it != confusables_.end() &&
               std::find(it->second.begin(), it->second.end(), y) != it->second.end();
    };
    auto near = [&](const std::string& x, const std::string& y) {
        return x != y && char_edit_distance(x, y) <= 2;
    };

    std::vector<std::string> out;
    for (const auto& x : best) {
        std::string replacement;
        // A token the other hypotheses agree on is only revised on
        // confusion-table evidence; edit distance alone is too eager.
        bool agreed = other_counts.count(x) && other_counts[x] >= vote_needed;
        if (!ne_token_set.count(x)) {
            for (const auto& y : ne_tokens)
                if (in_conf(x, y) || (!agreed && near(x, y))) {
                    replacement = y;
                    break;
                }
        }
        if (replacement.empty() && other_counts.find(x) == other_counts.end()) {
            for (const auto& y : other_tokens)
                if (in_conf(x, y)) {
                    replacement = y;
                    break;
                }
            if (replacement.empty())
                for (const auto& y : other_tokens)
                    if (near(x, y) && other_counts[y] >= vote_needed) {
                        replacement = y;
                        break;
                    }
        }
        out.push_back(replacement.empty() ? x : replacement);
    }
    return join_tokens(out);
}

// ---------------------------------------------------------------------------
// HTTP clients
// ---------------------------------------------------------------------------

namespace {

json post_json(const BackendConfig& config, const std::string& path, const json& body) {
    httplib::Client client(config.endpoint);
    client.set_connection_timeout(config.timeout_seconds);
    client.set_read_timeout(config.timeout_seconds);
    httplib::Headers headers;
    if (!config.bearer_token.empty())
        headers.emplace("Authorization", "Bearer " + config.bearer_token);

    std::string payload = body.dump();
    std::string last_error;
    int backoff = config.backoff_ms;
    for (int attempt = 0; attempt < config.retry_limit; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) {
            try {
                return json::parse(res->body);
            } catch (const std::exception& e) {
                throw Error("backends: invalid JSON from " + path + ": " + e.what());
            }
        }
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
        if (res->status >= 400 && res->status < 500) break;  // not retryable
    }
    throw Error("backends: request to " + config.endpoint + path + " failed after retries (" +
                last_error + ")");
}

}  // namespace

HttpTextGenerator::HttpTextGenerator(BackendConfig config) : config_(std::move(config)) {
    config_.validate();
}

std::string HttpTextGenerator::generate_text(const std::string& prompt) {
    json body{{"prompt", prompt},
              {"temperature", config_.decoding.temperature},
              {"top_p", config_.decoding.top_p}};
    return post_json(config_, "/generate", body).at("text").get<std::string>();
}

HttpSpeechSynthesizer::HttpSpeechSynthesizer(BackendConfig config) : config_(std::move(config)) {
    config_.validate();
}

std::string HttpSpeechSynthesizer::synthesize_speech(const std::string& transcript,
                                                     const std::string& style_ref) {
    if (style_ref.empty()) throw Error("backends: conditioning utterance required");
    json body{{"transcript", transcript}, {"style_ref", style_ref}};
    return post_json(config_, "/synthesize", body).at("audio_ref").get<std::string>();
}

HttpTranscriber::HttpTranscriber(BackendConfig config) : config_(std::move(config)) {
    config_.validate();
}

TranscriptionResult HttpTranscriber::transcribe(const std::string& audio_ref) {
    json body{{"audio_ref", audio_ref},
              {"beam_size", config_.decoding.beam_size}};
    json res = post_json(config_, "/transcribe", body);
    TranscriptionResult result;
    result.hypotheses = res.at("hypotheses").get<std::vector<std::string>>();
    if (res.contains("scores")) result.scores = res["scores"].get<std::vector<double>>();
    if (result.hypotheses.size() != config_.decoding.beam_size)
        throw Error("backends: transcriber returned wrong hypothesis count");
    return result;
}

HttpEmbedder::HttpEmbedder(BackendConfig config, std::size_t dimension)
    : config_(std::move(config)), dim_(dimension) {
    config_.validate();
}

std::vector<std::vector<double>> HttpEmbedder::embed(const std::vector<std::string>& texts) {
    json body{{"texts", texts}};
    auto vectors = post_json(config_, "/embed", body)
                       .at("vectors")
                       .get<std::vector<std::vector<double>>>();
    for (const auto& v : vectors)
        if (v.size() != dim_) throw Error("backends: embedder dimension mismatch");
    return vectors;
}

HttpCorrector::HttpCorrector(BackendConfig config) : config_(std::move(config)) {
    config_.validate();
}

std::string HttpCorrector::correct(const std::string& instruction) {
    if (instruction.empty()) throw Error("backends: empty instruction");
    json body{{"instruction", instruction}};
    return post_json(config_, "/correct", body).at("text").get<std::string>();
}

}  // namespace darag
