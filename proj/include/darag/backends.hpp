#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "darag/common.hpp"

namespace darag {

enum class BackendKind { http, mock };

struct DecodingConfig {
    double temperature = 0.7;
    double top_p = 1.0;
    std::size_t beam_size = 5;  // must equal the corpus N for the transcriber
};

struct BackendConfig {
    BackendKind kind = BackendKind::mock;
    std::string endpoint;  // http only, e.g. "http://host:port"
    std::string bearer_token;
    DecodingConfig decoding;
    std::uint64_t seed = 0;  // mock only
    int timeout_seconds = 30;
    int retry_limit = 3;
    int backoff_ms = 100;  // doubled per retry

    void validate() const;
};

// ---------------------------------------------------------------------------
// Backend interfaces. All are stateless request handlers, safe for
// bounded-parallel use; per-request mock seeds derive from (seed, input) so
// parallelism never changes outputs.
// ---------------------------------------------------------------------------

class TextGenerator {
  public:
    virtual ~TextGenerator() = default;
    virtual std::string generate_text(const std::string& prompt) = 0;
};

class SpeechSynthesizer {
  public:
    virtual ~SpeechSynthesizer() = default;
    /// Returns a reference to the synthesized waveform, conditioned on
    /// style_ref for voice cloning. style_ref is required.
    virtual std::string synthesize_speech(const std::string& transcript,
                                          const std::string& style_ref) = 0;
};

struct TranscriptionResult {
    std::vector<std::string> hypotheses;  // exactly beam_size entries
    std::vector<double> scores;           // non-increasing
};

class Transcriber {
  public:
    virtual ~Transcriber() = default;
    virtual TranscriptionResult transcribe(const std::string& audio_ref) = 0;
};

class Embedder {
  public:
    virtual ~Embedder() = default;
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
    virtual std::size_t dimension() const = 0;
};

class NerTagger {
  public:
    virtual ~NerTagger() = default;
    /// Returns (type, surface) pairs in order of appearance.
    virtual std::vector<std::pair<std::string, std::string>> tag(const std::string& text) = 0;
};

class Corrector {
  public:
    virtual ~Corrector() = default;
    virtual std::string correct(const std::string& instruction) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic mocks.
// ---------------------------------------------------------------------------

/// Token-level ASR error model. Misrecognition is decided per token: a
/// fraction of flagged tokens are "hard" errors (wrong in every draw, the
/// confusable varies), the rest are wrong in a random subset of draws. Draws
/// are then ordered by corruption count so the first hypothesis carries the
/// fewest errors.
struct MockErrorChannel {
    std::map<std::string, std::vector<std::string>> confusion_table;
    double substitution_rate = 0.0;
    double deletion_rate = 0.0;
    double insertion_rate = 0.0;
    double hard_error_fraction = 0.25;  // share of substitutions wrong in all draws
    std::uint64_t seed = 0;

    void validate() const;
};

/// Prefix used by the mock synthesizer; the payload is the transcript itself
/// so the mock transcriber can read it without any audio handling.
inline constexpr const char* kMockAudioPrefix = "mock-audio://";

class MockTextGenerator : public TextGenerator {
  public:
    explicit MockTextGenerator(std::uint64_t seed) : seed_(seed) {}
    std::string generate_text(const std::string& prompt) override;
    std::size_t call_count() const { return calls_.load(); }

  private:
    std::uint64_t seed_;
    std::atomic<std::size_t> calls_{0};
};

/// Returns the in-context examples verbatim; exists to exercise the
/// replication guard's worst case.
class CopyAttackGenerator : public TextGenerator {
  public:
    std::string generate_text(const std::string& prompt) override;
};

class MockSpeechSynthesizer : public SpeechSynthesizer {
  public:
    std::string synthesize_speech(const std::string& transcript,
                                  const std::string& style_ref) override;
    std::size_t call_count() const { return calls_.load(); }

  private:
    std::atomic<std::size_t> calls_{0};
};

class MockTranscriber : public Transcriber {
  public:
    MockTranscriber(MockErrorChannel channel, std::size_t beam_size)
        : channel_(std::move(channel)), beam_size_(beam_size) {
        channel_.validate();
    }
    TranscriptionResult transcribe(const std::string& audio_ref) override;
    std::size_t call_count() const { return calls_.load(); }

  private:
    MockErrorChannel channel_;
    std::size_t beam_size_;
    std::atomic<std::size_t> calls_{0};
};

/// Seeded hash-based random projection of the token multiset. Identical
/// texts map to identical vectors; disjoint-token texts are near-orthogonal
/// for dimension >= 64.
class MockEmbedder : public Embedder {
  public:
    MockEmbedder(std::size_t dimension, std::uint64_t seed) : dim_(dimension), seed_(seed) {
        if (dim_ == 0) throw Error("backends: embedder dimension must be positive");
    }
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    std::size_t dimension() const override { return dim_; }

  private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// Longest-match gazetteer tagger over a fixed lexicon of
/// normalized surface -> type. The default NER backend for tests.
class GazetteerTagger : public NerTagger {
  public:
    explicit GazetteerTagger(std::map<std::string, std::string> lexicon);
    std::vector<std::pair<std::string, std::string>> tag(const std::string& text) override;

  private:
    std::map<std::string, std::string> lexicon_;  // key: normalized surface
    std::size_t max_words_ = 1;
};

/// Oracle corrector: repairs best-hypothesis tokens whose confusable set
/// (symmetric closure of the channel table) intersects the retrieved NE
/// tokens or the other hypotheses. A stand-in for the fine-tuned LLM that
/// exercises the full instruction/retrieval data path.
class OracleCorrector : public Corrector {
  public:
    explicit OracleCorrector(const std::map<std::string, std::vector<std::string>>& confusion_table);
    std::string correct(const std::string& instruction) override;
    std::size_t call_count() const { return calls_.load(); }

  private:
    std::map<std::string, std::vector<std::string>> confusables_;  // symmetric closure
    std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// HTTP clients. JSON POST protocols, exponential backoff up to retry_limit.
// ---------------------------------------------------------------------------

class HttpTextGenerator : public TextGenerator {
  public:
    explicit HttpTextGenerator(BackendConfig config);
    std::string generate_text(const std::string& prompt) override;

  private:
    BackendConfig config_;
};

class HttpSpeechSynthesizer : public SpeechSynthesizer {
  public:
    explicit HttpSpeechSynthesizer(BackendConfig config);
    std::string synthesize_speech(const std::string& transcript,
                                  const std::string& style_ref) override;

  private:
    BackendConfig config_;
};

class HttpTranscriber : public Transcriber {
  public:
    explicit HttpTranscriber(BackendConfig config);
    TranscriptionResult transcribe(const std::string& audio_ref) override;

  private:
    BackendConfig config_;
};

class HttpEmbedder : public Embedder {
  public:
    HttpEmbedder(BackendConfig config, std::size_t dimension);
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    std::size_t dimension() const override { return dim_; }

  private:
    BackendConfig config_;
    std::size_t dim_;
};

class HttpCorrector : public Corrector {
  public:
    explicit HttpCorrector(BackendConfig config);
    std::string correct(const std::string& instruction) override;

  private:
    BackendConfig config_;
};

/// The full set of services the pipeline needs, mock or http.
struct BackendSet {
    std::shared_ptr<TextGenerator> generator;
    std::shared_ptr<SpeechSynthesizer> synthesizer;
    std::shared_ptr<Transcriber> transcriber;
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<NerTagger> tagger;
    std::shared_ptr<Corrector> corrector;
};

}  // namespace darag
