#pragma once

#include <string>
#include <vector>

#include "darag/common.hpp"

namespace darag {

/// Canonical correction instruction layout. The preamble and field labels
/// are fixed; hypotheses sit one per line, the NE list is comma+space
/// separated. An empty NE list keeps the header with an empty field.
std::string build_instruction(const std::string& best_hypothesis,
                              const std::vector<std::string>& other_hypotheses,
                              const std::vector<std::string>& named_entities);

struct ParsedInstruction {
    std::string best_hypothesis;
    std::vector<std::string> other_hypotheses;
    std::vector<std::string> named_entities;
};

/// Exact inverse of build_instruction for any emitted instruction.
ParsedInstruction parse_instruction(const std::string& instruction);

}  // namespace darag
