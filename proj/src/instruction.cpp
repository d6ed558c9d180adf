#include "darag/instruction.hpp"

#include <sstream>

namespace darag {

namespace {

constexpr const char* kPreamble =
    "Below is the best hypothesis transcribed from a speech recognition system. "
    "Please try to revise it using the words that are only included in the other "
    "hypotheses and a list of named entities from a database, both of which will "
    "be provided to you.";

constexpr const char* kBestLabel = "Best-hypothesis: ";
constexpr const char* kOtherLabel = "Other-hypothesis:";
constexpr const char* kNeLabel = "Named-Entities: ";

}  // namespace

std::string build_instruction(const std::string& best_hypothesis,
                              const std::vector<std::string>& other_hypotheses,
                              const std::vector<std::string>& named_entities) {
    if (best_hypothesis.empty()) throw Error("instruction: empty best hypothesis");
    std::ostringstream out;
    out << kPreamble << "\n\n";
    out << kBestLabel << best_hypothesis << '\n';
    out << kOtherLabel << '\n';
    for (const auto& hyp : other_hypotheses) out << hyp << '\n';
    out << kNeLabel;
    for (std::size_t i = 0; i < named_entities.size(); ++i) {
        if (i) out << ", ";
        out << named_entities[i];
    }
    out << '\n';
    return out.str();
}

ParsedInstruction parse_instruction(const std::string& instruction) {
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(instruction);
    while (std::getline(in, line)) lines.push_back(line);

    ParsedInstruction parsed;
    std::size_t i = 0;
    auto starts_with = [](const std::string& s, const char* prefix) {
        return s.rfind(prefix, 0) == 0;
    };
    while (i < lines.size() && !starts_with(lines[i], kBestLabel)) ++i;
    if (i == lines.size()) throw Error("instruction: missing Best-hypothesis field");
    parsed.best_hypothesis = lines[i].substr(std::string(kBestLabel).size());
    ++i;
    if (i >= lines.size() || lines[i] != kOtherLabel)
        throw Error("instruction: missing Other-hypothesis field");
    ++i;
    while (i < lines.size() && !starts_with(lines[i], kNeLabel)) {
        parsed.other_hypotheses.push_back(lines[i]);
        ++i;
    }
    if (i == lines.size()) throw Error("instruction: missing Named-Entities field");
    std::string ne_field = lines[i].substr(std::string(kNeLabel).size());
    std::size_t pos = 0;
    while (pos < ne_field.size()) {
        std::size_t next = ne_field.find(", ", pos);
        if (next == std::string::npos) {
            parsed.named_entities.push_back(ne_field.substr(pos));
            break;
        }
        parsed.named_entities.push_back(ne_field.substr(pos, next - pos));
        pos = next + 2;
    }
    return parsed;
}

}  // namespace darag
