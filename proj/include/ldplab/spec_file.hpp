#pragma once

// System files:
//   { "alphabet": ["0", "1"],
//     "transitions": [[1, 1], [1, 0]],
//     "potentials": { "ind1": { "memory": 1, "table": { "0": 0, "1": 1 } } } }
// Table keys are symbol names concatenated, with '.' separators when any
// symbol name is longer than one character.

#include <map>
#include <string>
#include <vector>

#include "ldplab/sft.hpp"

namespace ldplab {

struct SystemFile {
  SubshiftSpec spec;
  std::vector<std::string> alphabet;
  std::map<std::string, Potential> potentials;
  std::uint64_t content_hash = 0;  // FNV-1a of the file bytes

  Word parse_word(const std::string& text) const;
  std::string format_word(const Word& w) const;
  const Potential& potential(const std::string& name) const;
};

// Throws ParseError (with line and column) or ValidationError (whose cause()
// names the failed invariant: NotPrimitive, IncompleteTable, ...).
SystemFile parse_system(const std::string& text);
SystemFile load_spec(const std::string& path);

std::uint64_t fnv1a(const std::string& bytes) noexcept;

}  // namespace ldplab
