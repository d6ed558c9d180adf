#include "darag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "darag/backends.hpp"

namespace darag {

using ordered_json = nlohmann::ordered_json;

Alignment align(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
    if (ref.empty()) throw Error("metrics: empty reference");
    const std::size_t nr = ref.size();
    const std::size_t nh = hyp.size();
    // cost[i][j] = min edits aligning ref[0..i) with hyp[0..j)
    std::vector<std::vector<std::size_t>> cost(nr + 1, std::vector<std::size_t>(nh + 1));
    for (std::size_t i = 0; i <= nr; ++i) cost[i][0] = i;
    for (std::size_t j = 0; j <= nh; ++j) cost[0][j] = j;
    for (std::size_t i = 1; i <= nr; ++i) {
        for (std::size_t j = 1; j <= nh; ++j) {
            std::size_t diag = cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
            std::size_t del = cost[i - 1][j] + 1;
            std::size_t ins = cost[i][j - 1] + 1;
            cost[i][j] = std::min({diag, del, ins});
        }
    }
    Alignment out;
    // Backtrace, tie-break: match > substitute > delete > insert.
    std::size_t i = nr, j = nh;
    std::vector<AlignmentStep> rev;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && cost[i][j] == cost[i - 1][j - 1]) {
            rev.push_back({EditOp::match, ref[i - 1], hyp[j - 1]});
            --i, --j;
        } else if (i > 0 && j > 0 && cost[i][j] == cost[i - 1][j - 1] + 1) {
            rev.push_back({EditOp::substitute, ref[i - 1], hyp[j - 1]});
            --i, --j;
        } else if (i > 0 && cost[i][j] == cost[i - 1][j] + 1) {
            rev.push_back({EditOp::delete_op, ref[i - 1], std::nullopt});
            --i;
        } else {
            rev.push_back({EditOp::insert_op, std::nullopt, hyp[j - 1]});
            --j;
        }
    }
    out.ops.assign(rev.rbegin(), rev.rend());
    for (const auto& step : out.ops) {
        switch (step.op) {
            case EditOp::match: ++out.matches; break;
            case EditOp::substitute: ++out.substitutions; break;
            case EditOp::insert_op: ++out.insertions; break;
            case EditOp::delete_op: ++out.deletions; break;
        }
    }
    return out;
}

double wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
    Alignment a = align(ref, hyp);
    return static_cast<double>(a.errors()) / static_cast<double>(ref.size());
}

double wer(const std::string& ref, const std::string& hyp) {
    return wer(tokenize(ref), tokenize(hyp));
}

double corpus_wer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
    if (refs.size() != hyps.size()) throw Error("metrics: corpus_wer list length mismatch");
    std::size_t errors = 0;
    std::size_t ref_len = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        auto ref = tokenize(refs[i]);
        Alignment a = align(ref, tokenize(hyps[i]));
        errors += a.errors();
        ref_len += ref.size();
    }
    if (ref_len == 0) throw Error("metrics: corpus_wer with empty total reference");
    return static_cast<double>(errors) / static_cast<double>(ref_len);
}

namespace {

std::map<std::vector<std::string>, std::size_t> ngram_counts(const std::vector<std::string>& toks,
                                                             std::size_t n) {
    std::map<std::vector<std::string>, std::size_t> counts;
    if (toks.size() < n) return counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i)
        ++counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
    return counts;
}

}  // namespace

std::vector<double> bleu_n(const std::vector<std::string>& candidate,
                           const std::vector<std::string>& reference, std::size_t n_max) {
    std::vector<double> out(n_max, 0.0);
    if (candidate.empty()) return out;
    double bp = 1.0;
    if (candidate.size() < reference.size())
        bp = std::exp(1.0 - static_cast<double>(reference.size()) /
                                static_cast<double>(candidate.size()));
    std::vector<double> precisions;
    for (std::size_t n = 1; n <= n_max; ++n) {
        if (candidate.size() < n) {
            out[n - 1] = 0.0;
            precisions.push_back(0.0);
            continue;
        }
        auto cand = ngram_counts(candidate, n);
        auto ref = ngram_counts(reference, n);
        std::size_t clipped = 0, total = 0;
        for (const auto& [gram, count] : cand) {
            total += count;
            auto it = ref.find(gram);
            if (it != ref.end()) clipped += std::min(count, it->second);
        }
        precisions.push_back(total ? static_cast<double>(clipped) / total : 0.0);
        // Geometric mean of precisions up to n, no smoothing.
        double log_sum = 0.0;
        bool zero = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (precisions[i] <= 0.0) {
                zero = true;
                break;
            }
            log_sum += std::log(precisions[i]);
        }
        out[n - 1] = zero ? 0.0 : bp * std::exp(log_sum / static_cast<double>(n));
    }
    return out;
}

std::vector<double> bleu_n(const std::string& candidate, const std::string& reference,
                           std::size_t n_max) {
    return bleu_n(tokenize(candidate), tokenize(reference), n_max);
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) throw Error("metrics: cosine dimension mismatch");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw Error("metrics: degenerate embedding");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

F1Scores entity_f1(const std::vector<TypedEntity>& gold, const std::vector<TypedEntity>& pred) {
    std::map<std::pair<std::string, std::string>, std::size_t> remaining;
    for (const auto& g : gold) ++remaining[{g.type, g.surface}];
    std::size_t tp = 0;
    for (const auto& p : pred) {
        auto it = remaining.find({p.type, p.surface});
        if (it != remaining.end() && it->second > 0) {
            ++tp;
            --it->second;
        }
    }
    F1Scores s;
    s.precision = pred.empty() ? 0.0 : static_cast<double>(tp) / pred.size();
    s.recall = gold.empty() ? 0.0 : static_cast<double>(tp) / gold.size();
    s.f1 = (s.precision + s.recall) > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
}

ReplicationReport replication_check(const std::vector<std::string>& generated,
                                    const std::vector<std::string>& training, Embedder& embedder,
                                    double replica_threshold) {
    if (training.empty()) throw Error("metrics: replication_check with empty training set");
    ReplicationReport report;
    if (generated.empty()) return report;
    auto train_vecs = embedder.embed(training);
    auto gen_vecs = embedder.embed(generated);
    for (std::size_t g = 0; g < generated.size(); ++g) {
        double best_sim = -2.0;
        std::size_t best_idx = 0;
        for (std::size_t t = 0; t < training.size(); ++t) {
            double sim = cosine(gen_vecs[g], train_vecs[t]);
            if (sim > best_sim) {
                best_sim = sim;
                best_idx = t;
            }
        }
        auto bleu = bleu_n(generated[g], training[best_idx], 3);
        double bleu_avg = (bleu[0] + bleu[1] + bleu[2]) / 3.0;
        report.per_item_similarity.push_back(best_sim);
        report.per_item_bleu.push_back(bleu_avg);
        if (bleu_avg > replica_threshold) report.flagged.push_back(g);
    }
    for (double s : report.per_item_similarity) report.mean_similarity += s;
    for (double b : report.per_item_bleu) report.mean_bleu += b;
    report.mean_similarity /= static_cast<double>(generated.size());
    report.mean_bleu /= static_cast<double>(generated.size());
    return report;
}

namespace {

ordered_json scores_to_json(const AblationScores& s) {
    ordered_json j;
    j["baseline_wer"] = s.baseline_wer;
    j["corrected_wer"] = s.corrected_wer;
    j["relative_improvement"] = s.relative_improvement;
    if (s.entity_scores) {
        j["entity_precision"] = s.entity_scores->precision;
        j["entity_recall"] = s.entity_scores->recall;
        j["entity_f1"] = s.entity_scores->f1;
    }
    return j;
}

AblationScores scores_from_json(const ordered_json& j) {
    AblationScores s;
    s.baseline_wer = j.at("baseline_wer").get<double>();
    s.corrected_wer = j.at("corrected_wer").get<double>();
    s.relative_improvement = j.at("relative_improvement").get<double>();
    if (j.contains("entity_f1")) {
        F1Scores f;
        f.precision = j.at("entity_precision").get<double>();
        f.recall = j.at("entity_recall").get<double>();
        f.f1 = j.at("entity_f1").get<double>();
        s.entity_scores = f;
    }
    return s;
}

}  // namespace

std::string eval_report_to_json(const EvalReport& report) {
    ordered_json j;
    j["run_id"] = report.run_id;
    j["seeds"] = report.seeds;
    ordered_json per_seed = ordered_json::object();
    for (const auto& [name, rows] : report.per_seed) {
        ordered_json arr = ordered_json::array();
        for (const auto& row : rows) arr.push_back(scores_to_json(row));
        per_seed[name] = arr;
    }
    j["per_seed"] = per_seed;
    ordered_json mean = ordered_json::object();
    for (const auto& [name, row] : report.mean) mean[name] = scores_to_json(row);
    j["mean"] = mean;
    if (report.replication) {
        ordered_json r;
        r["mean_similarity"] = report.replication->mean_similarity;
        r["mean_bleu"] = report.replication->mean_bleu;
        r["flagged"] = report.replication->flagged;
        j["replication"] = r;
    }
    return j.dump(2) + "\n";
}

EvalReport eval_report_from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    EvalReport report;
    report.run_id = j.at("run_id").get<std::string>();
    report.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& [name, arr] : j.at("per_seed").items()) {
        std::vector<AblationScores> rows;
        for (const auto& row : arr) rows.push_back(scores_from_json(row));
        report.per_seed.emplace_back(name, std::move(rows));
    }
    for (const auto& [name, row] : j.at("mean").items())
        report.mean.emplace_back(name, scores_from_json(row));
    if (j.contains("replication")) {
        ReplicationReport r;
        r.mean_similarity = j["replication"].at("mean_similarity").get<double>();
        r.mean_bleu = j["replication"].at("mean_bleu").get<double>();
        r.flagged = j["replication"].at("flagged").get<std::vector<std::size_t>>();
        report.replication = r;
    }
    return report;
}

namespace {

std::string pct1(double ratio) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", ratio * 100.0);
    return buf;
}

std::string signed_pct1(double ratio) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.1f%%", ratio * 100.0);
    return buf;
}

}  // namespace

std::string render_report_table(const EvalReport& report) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Mode", "Baseline WER", "Corrected WER", "Rel. Improvement", "Entity F1"});
    for (const auto& [name, s] : report.mean) {
        std::vector<std::string> row;
        row.push_back(name);
        row.push_back(pct1(s.baseline_wer));
        row.push_back(pct1(s.corrected_wer));
        // Table cells show the change relative to baseline; negative is better.
        row.push_back(signed_pct1(-s.relative_improvement));
        row.push_back(s.entity_scores ? pct1(s.entity_scores->f1) : std::string{"-"});
        rows.push_back(std::move(row));
    }
    std::vector<std::size_t> widths(rows.front().size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    std::ostringstream out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            out << rows[r][c] << std::string(widths[c] - rows[r][c].size(), ' ');
            if (c + 1 < rows[r].size()) out << "  ";
        }
        out << '\n';
        if (r == 0) {
            for (std::size_t c = 0; c < widths.size(); ++c) {
                out << std::string(widths[c], '-');
                if (c + 1 < widths.size()) out << "  ";
            }
            out << '\n';
        }
    }
    return out.str();
}

}  // namespace darag
