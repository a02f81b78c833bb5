#include "ldplab/spec_file.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ldplab {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(ErrorKind cause, const std::string& message) {
  throw Error(ErrorKind::ValidationError, cause,
              std::string(to_string(cause)) + ": " + message);
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text,
                                                std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

std::uint64_t fnv1a(const std::string& bytes) noexcept {
  std::uint64_t h = UINT64_C(0xcbf29ce484222325);
  for (unsigned char c : bytes) {
    h ^= c;
    h *= UINT64_C(0x100000001b3);
  }
  return h;
}

Word SystemFile::parse_word(const std::string& text) const {
  const bool wide = std::any_of(alphabet.begin(), alphabet.end(),
                                [](const std::string& s) { return s.size() != 1; });
  std::vector<std::string> parts;
  if (wide) {
    std::stringstream in(text);
    for (std::string part; std::getline(in, part, '.');) parts.push_back(part);
  } else {
    for (char c : text) {
      if (c != '.') parts.emplace_back(1, c);
    }
  }
  Word w;
  for (const auto& part : parts) {
    const auto it = std::find(alphabet.begin(), alphabet.end(), part);
    if (it == alphabet.end()) {
      throw Error(ErrorKind::InvalidArgument,
                  "unknown symbol '" + part + "' in word '" + text + "'");
    }
    w.push_back(static_cast<Symbol>(it - alphabet.begin()));
  }
  return w;
}

std::string SystemFile::format_word(const Word& w) const {
  const bool wide = std::any_of(alphabet.begin(), alphabet.end(),
                                [](const std::string& s) { return s.size() != 1; });
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (wide && i > 0) out += '.';
    out += alphabet[static_cast<std::size_t>(w[i])];
  }
  return out;
}

const Potential& SystemFile::potential(const std::string& name) const {
  const auto it = potentials.find(name);
  if (it == potentials.end()) {
    throw Error(ErrorKind::InvalidArgument,
                "potential '" + name + "' is not defined in the system file");
  }
  return it->second;
}

SystemFile parse_system(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) +
                                           ", column " + std::to_string(column) +
                                           ": " + e.what());
  }

  SystemFile file;
  file.content_hash = fnv1a(text);
  try {
    if (!doc.is_object() || !doc.contains("transitions")) {
      invalid(ErrorKind::InvalidMatrix, "missing \"transitions\"");
    }
    const auto matrix = doc.at("transitions").get<BinaryMatrix>();
    if (doc.contains("alphabet")) {
      file.alphabet = doc.at("alphabet").get<std::vector<std::string>>();
    } else {
      for (std::size_t i = 0; i < matrix.size(); ++i) {
        file.alphabet.push_back(std::to_string(i));
      }
    }
    if (file.alphabet.size() != matrix.size()) {
      invalid(ErrorKind::InvalidMatrix,
              "alphabet size does not match the transition matrix");
    }
    for (std::size_t i = 0; i < file.alphabet.size(); ++i) {
      if (file.alphabet[i].empty() || file.alphabet[i].find('.') != std::string::npos ||
          std::count(file.alphabet.begin(), file.alphabet.end(), file.alphabet[i]) > 1) {
        invalid(ErrorKind::InvalidMatrix,
                "symbol names must be unique, nonempty and free of '.'");
      }
    }
    try {
      file.spec = validate_spec(matrix);
    } catch (const Error& e) {
      invalid(e.kind(), e.what());
    }

    if (doc.contains("potentials")) {
      for (const auto& [name, body] : doc.at("potentials").items()) {
        const int memory = body.at("memory").get<int>();
        std::map<Word, double> table;
        for (const auto& [key, value] : body.at("table").items()) {
          Word w;
          try {
            w = file.parse_word(key);
          } catch (const Error& e) {
            invalid(ErrorKind::InvalidPotential, name + ": " + e.what());
          }
          if (static_cast<int>(w.size()) != memory) {
            invalid(ErrorKind::InvalidPotential,
                    name + ": key '" + key + "' does not have length " +
                        std::to_string(memory));
          }
          table[w] = value.get<double>();
        }
        try {
          Potential phi(memory, std::move(table));
          validate_potential(file.spec, phi);
          file.potentials.emplace(name, std::move(phi));
        } catch (const Error& e) {
          invalid(e.kind(), "potential '" + name + "': " + e.what());
        }
      }
    }
  } catch (const json::exception& e) {
    invalid(ErrorKind::InvalidArgument, e.what());
  }
  return file;
}

SystemFile load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_system(buffer.str());
}

}  // namespace ldplab
