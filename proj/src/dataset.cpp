#include "morphoscope/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "morphoscope/log.hpp"
#include "morphoscope/util.hpp"

namespace morphoscope {

namespace {

constexpr char kMagic[4] = {'I', 'P', 'R', 'B'};
constexpr std::uint16_t kFormatVersion = 1;

void put_bytes(std::string& out, std::uint64_t value, int n_bytes) {
  for (int i = 0; i < n_bytes; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

std::uint64_t get_bytes(const char* p, int n_bytes) {
  std::uint64_t value = 0;
  for (int i = 0; i < n_bytes; ++i)
    value |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return value;
}

// UniMorph feature -> attribute, for checking that conjunctions stay within
// one attribute. Unknown features pass through unchecked.
const std::unordered_map<std::string, std::string>& feature_attribute_table() {
  static const std::unordered_map<std::string, std::string> table = {
      {"SG", "Number"},       {"PL", "Number"},       {"DU", "Number"},
      {"FEM", "Gender"},      {"MASC", "Gender"},     {"NEUT", "Gender"},
      {"NOM", "Case"},        {"ACC", "Case"},        {"GEN", "Case"},
      {"DAT", "Case"},        {"ESS", "Case"},        {"INS", "Case"},
      {"ABL", "Case"},        {"ALL", "Case"},        {"AT", "Case"},
      {"IN", "Case"},         {"ON", "Case"},         {"COM", "Case"},
      {"PRT", "Case"},        {"ERG", "Case"},        {"ABS", "Case"},
      {"FRML", "Case"},       {"TRANS", "Case"},      {"VOC", "Case"},
      {"DEF", "Definiteness"},{"INDF", "Definiteness"},
      {"PRS", "Tense"},       {"PST", "Tense"},       {"FUT", "Tense"},
      {"IPFV", "Aspect"},     {"PFV", "Aspect"},      {"PROG", "Aspect"},
      {"PROSP", "Aspect"},    {"PRF", "Aspect"},
      {"IND", "Mood"},        {"SBJV", "Mood"},       {"IMP", "Mood"},
      {"1", "Person"},        {"2", "Person"},        {"3", "Person"},
      {"ACT", "Voice"},       {"PASS", "Voice"},      {"MID", "Voice"},
      {"ANIM", "Animacy"},    {"INAN", "Animacy"},    {"HUM", "Animacy"},
      {"NHUM", "Animacy"},
      {"CMPR", "Comparison"}, {"SPRL", "Comparison"}, {"RL", "Comparison"},
      {"FIN", "Finiteness"},  {"NFIN", "Finiteness"},
      {"POS", "Polarity"},    {"NEG", "Polarity"},
      {"PSS1S", "Possession"},{"PSS2S", "Possession"},{"PSS3S", "Possession"},
      {"PSSD", "Possession"},
  };
  return table;
}

std::vector<std::string> split_string(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string serialize_tag(const std::vector<std::pair<std::string, std::string>>& tag) {
  std::string out;
  for (std::size_t i = 0; i < tag.size(); ++i) {
    if (i > 0) out.push_back(';');
    out += tag[i].first;
    out.push_back('=');
    out += tag[i].second;
  }
  return out;
}

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "validation") return Split::validation;
  if (name == "test") return Split::test;
  return std::nullopt;
}

const std::string* LabeledToken::value_of(const std::string& attribute) const {
  for (const auto& [attr, value] : tag) {
    if (attr == attribute) return &value;
  }
  return nullptr;
}

std::optional<std::string> canonicalize_tag(const std::string& raw) {
  // Disjunctions need language-specific handling; those annotations go.
  if (raw.find('|') != std::string::npos) return std::nullopt;

  std::string cleaned;
  cleaned.reserve(raw.size());
  for (char c : raw) {
    if (c != '{' && c != '}') cleaned.push_back(c);
  }

  std::vector<std::string> parts;
  for (std::string& part : split_string(cleaned, '+')) {
    if (part == "OR") return std::nullopt;  // disjunction in feature position
    if (part.rfind("LGSPEC", 0) == 0) continue;  // language-specific, dropped
    if (!part.empty()) parts.push_back(std::move(part));
  }
  if (parts.empty()) return std::nullopt;
  if (parts.size() == 1) return parts[0];

  // "PST+PRF" is admitted whole as a Tense value.
  if (parts.size() == 2) {
    const bool pst_prf = (parts[0] == "PST" && parts[1] == "PRF") ||
                         (parts[0] == "PRF" && parts[1] == "PST");
    if (pst_prf) return std::string("PST+PRF");
  }

  const auto& table = feature_attribute_table();
  const std::string* attribute = nullptr;
  for (const std::string& part : parts) {
    const auto it = table.find(part);
    if (it == table.end()) continue;
    if (attribute == nullptr) {
      attribute = &it->second;
    } else if (*attribute != it->second) {
      throw InvalidTag("conjunction '" + raw + "' spans attributes '" + *attribute +
                       "' and '" + it->second + "'");
    }
  }

  std::sort(parts.begin(), parts.end());
  std::string joined = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) {
    joined.push_back('+');
    joined += parts[i];
  }
  return joined;
}

void write_matrix(const std::string& path, const Eigen::Ref<const Eigen::MatrixXf>& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  std::string header;
  header.append(kMagic, 4);
  put_bytes(header, kFormatVersion, 2);
  put_bytes(header, static_cast<std::uint64_t>(m.rows()), 8);
  put_bytes(header, static_cast<std::uint64_t>(m.cols()), 4);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  std::string row_buf;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    row_buf.clear();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      put_bytes(row_buf, std::bit_cast<std::uint32_t>(m(i, j)), 4);
    }
    out.write(row_buf.data(), static_cast<std::streamsize>(row_buf.size()));
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

Eigen::MatrixXf read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (contents.size() < 18) throw FormatError("matrix file '" + path + "' truncated header");
  if (std::memcmp(contents.data(), kMagic, 4) != 0) {
    throw FormatError("matrix file '" + path + "' has wrong magic");
  }
  const std::uint16_t version = static_cast<std::uint16_t>(get_bytes(contents.data() + 4, 2));
  if (version != kFormatVersion) {
    throw FormatError("matrix file '" + path + "' has unsupported version " +
                      std::to_string(version));
  }
  const std::uint64_t n = get_bytes(contents.data() + 6, 8);
  const std::uint32_t d = static_cast<std::uint32_t>(get_bytes(contents.data() + 14, 4));
  const std::uint64_t expected = 18 + n * static_cast<std::uint64_t>(d) * 4;
  if (contents.size() != expected) {
    throw FormatError("matrix file '" + path + "' has " + std::to_string(contents.size()) +
                      " bytes, expected " + std::to_string(expected));
  }
  Eigen::MatrixXf m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const char* p = contents.data() + 18;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = std::bit_cast<float>(static_cast<std::uint32_t>(get_bytes(p, 4)));
      p += 4;
    }
  }
  return m;
}

void write_labels(const std::string& path, const std::vector<LabeledToken>& tokens) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "index\tsplit\tword_form\ttag\n";
  for (const auto& token : tokens) {
    out << token.row_index << '\t' << split_name(token.split) << '\t' << token.word_form
        << '\t' << serialize_tag(token.tag) << '\n';
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

std::vector<LabeledToken> read_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("labels file '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "index\tsplit\tword_form\ttag") {
    throw FormatError("labels file '" + path + "' has unexpected header '" + line + "'");
  }
  std::vector<LabeledToken> tokens;
  long long line_no = 1;
  long long dropped_pairs = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_string(line, '\t');
    if (fields.size() != 4) {
      throw FormatError("labels line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected 4");
    }
    LabeledToken token;
    try {
      std::size_t consumed = 0;
      token.row_index = std::stoll(fields[0], &consumed);
      if (consumed != fields[0].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError("labels line " + std::to_string(line_no) + " has bad index '" +
                        fields[0] + "'");
    }
    const auto split = parse_split(fields[1]);
    if (!split) {
      throw FormatError("labels line " + std::to_string(line_no) + " has unknown split '" +
                        fields[1] + "'");
    }
    token.split = *split;
    token.word_form = fields[2];

    if (!fields[3].empty()) {
      std::set<std::string> seen_attrs;
      for (const std::string& pair : split_string(fields[3], ';')) {
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos || eq == 0) {
          throw FormatError("labels line " + std::to_string(line_no) +
                            " has malformed tag pair '" + pair + "'");
        }
        const std::string attr = pair.substr(0, eq);
        const std::string value = pair.substr(eq + 1);
        if (!seen_attrs.insert(attr).second) {
          throw FormatError("labels line " + std::to_string(line_no) +
                            " repeats attribute '" + attr + "'");
        }
        try {
          const auto canon = canonicalize_tag(value);
          if (canon) {
            token.tag.emplace_back(attr, *canon);
          } else {
            ++dropped_pairs;
          }
        } catch (const InvalidTag&) {
          ++dropped_pairs;
        }
      }
    }
    tokens.push_back(std::move(token));
  }
  if (dropped_pairs > 0) {
    log_warn("dropped " + std::to_string(dropped_pairs) +
             " annotation(s) during canonicalization of '" + path + "'");
  }
  return tokens;
}

EmbeddingDataset make_dataset(Eigen::MatrixXf embeddings, std::vector<LabeledToken> tokens) {
  const Eigen::Index n = embeddings.rows();
  if (static_cast<Eigen::Index>(tokens.size()) != n) {
    throw ConsistencyError("labels have " + std::to_string(tokens.size()) +
                           " rows, matrix has " + std::to_string(n));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < embeddings.cols(); ++j) {
      if (!std::isfinite(embeddings(i, j))) {
        throw DataError("non-finite embedding value at row " + std::to_string(i), i);
      }
    }
  }
  // Tokens must cover matrix rows exactly once.
  {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (const auto& token : tokens) {
      if (token.row_index < 0 || token.row_index >= n) {
        throw ConsistencyError("label index " + std::to_string(token.row_index) +
                               " out of range [0, " + std::to_string(n) + ")");
      }
      if (seen[static_cast<std::size_t>(token.row_index)]) {
        throw ConsistencyError("label index " + std::to_string(token.row_index) + " repeated");
      }
      seen[static_cast<std::size_t>(token.row_index)] = 1;
    }
  }
  std::sort(tokens.begin(), tokens.end(),
            [](const LabeledToken& a, const LabeledToken& b) { return a.row_index < b.row_index; });

  EmbeddingDataset ds;
  ds.d = static_cast<int>(embeddings.cols());
  ds.embeddings = std::move(embeddings);
  ds.tokens = std::move(tokens);

  // Registry: distinct word forms and token counts per (attribute, value, split).
  std::map<std::string, std::map<std::string, std::array<std::unordered_set<std::string>, kNumSplits>>>
      forms;
  for (const auto& token : ds.tokens) {
    const int s = static_cast<int>(token.split);
    for (const auto& [attr, value] : token.tag) {
      auto& entry = ds.registry[attr];
      auto& counts = entry.values[value];
      ++counts.tokens[static_cast<std::size_t>(s)];
      if (!token.word_form.empty()) entry.has_word_forms = true;
      forms[attr][value][static_cast<std::size_t>(s)].insert(token.word_form);
    }
  }
  for (auto& [attr, entry] : ds.registry) {
    for (auto& [value, counts] : entry.values) {
      for (int s = 0; s < kNumSplits; ++s) {
        counts.types[static_cast<std::size_t>(s)] =
            static_cast<long long>(forms[attr][value][static_cast<std::size_t>(s)].size());
      }
    }
  }

  // Content hash: matrix payload plus canonical label serialization.
  Fnv1a hash;
  hash.add_u64(static_cast<std::uint64_t>(ds.rows()));
  hash.add_u64(static_cast<std::uint64_t>(ds.d));
  for (Eigen::Index i = 0; i < ds.embeddings.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.embeddings.cols(); ++j) {
      hash.add_u64(std::bit_cast<std::uint32_t>(ds.embeddings(i, j)));
    }
  }
  for (const auto& token : ds.tokens) {
    hash.add_u64(static_cast<std::uint64_t>(token.row_index));
    hash.add_string(split_name(token.split));
    hash.add_string(token.word_form);
    hash.add_string(serialize_tag(token.tag));
  }
  ds.dataset_id = hash.hex();
  return ds;
}

EmbeddingDataset load_dataset(const std::string& matrix_path, const std::string& labels_path) {
  Eigen::MatrixXf m = read_matrix(matrix_path);
  std::vector<LabeledToken> tokens = read_labels(labels_path);
  return make_dataset(std::move(m), std::move(tokens));
}

FilterResult filter_attribute_values(const EmbeddingDataset& dataset,
                                     const std::string& attribute, long long min_types) {
  const auto it = dataset.registry.find(attribute);
  if (it == dataset.registry.end()) {
    throw UnknownAttribute("attribute '" + attribute + "' not present in dataset");
  }
  const AttributeEntry& entry = it->second;

  FilterResult result;
  result.schema.attribute = attribute;
  result.token_fallback = !entry.has_word_forms;
  if (result.token_fallback) {
    log_warn("attribute '" + attribute +
             "' has no word forms; falling back to token counts for the type filter");
  }

  for (const auto& [value, counts] : entry.values) {
    const auto& per_split = result.token_fallback ? counts.tokens : counts.types;
    long long minimum = per_split[0];
    int min_split = 0;
    for (int s = 1; s < kNumSplits; ++s) {
      if (per_split[static_cast<std::size_t>(s)] < minimum) {
        minimum = per_split[static_cast<std::size_t>(s)];
        min_split = s;
      }
    }
    if (minimum < min_types) {
      result.dropped.emplace_back(
          value, "only " + std::to_string(minimum) + " word types in " +
                     split_name(static_cast<Split>(min_split)) + " split (need " +
                     std::to_string(min_types) + ")");
    } else {
      result.schema.values.push_back(value);  // registry map is alphabetical
    }
  }
  result.attribute_excluded = result.schema.values.size() < 2;
  if (result.attribute_excluded) {
    log_warn("attribute '" + attribute + "' excluded: " +
             std::to_string(result.schema.values.size()) + " value(s) survive the filter");
    return result;
  }

  std::set<std::string> surviving(result.schema.values.begin(), result.schema.values.end());
  for (const auto& token : dataset.tokens) {
    const std::string* value = token.value_of(attribute);
    if (value != nullptr && surviving.count(*value) > 0) {
      result.rows[static_cast<std::size_t>(token.split)].push_back(token.row_index);
    }
  }
  return result;
}

AttributeView make_view(const EmbeddingDataset& dataset, const AttributeSchema& schema,
                        Split split) {
  AttributeView view;
  for (const auto& token : dataset.tokens) {
    if (token.split != split) continue;
    const std::string* value = token.value_of(schema.attribute);
    if (value == nullptr) continue;
    const int idx = schema.index_of(*value);
    if (idx < 0) continue;  // value not modeled (filtered out)
    view.y.push_back(idx);
    view.row_indices.push_back(token.row_index);
  }
  view.X = Mat(static_cast<Eigen::Index>(view.row_indices.size()), dataset.d);
  for (std::size_t i = 0; i < view.row_indices.size(); ++i) {
    view.X.row(static_cast<Eigen::Index>(i)) =
        dataset.embeddings.row(view.row_indices[i]).cast<double>();
  }
  return view;
}

EmbeddingDataset subset_dataset(const EmbeddingDataset& dataset,
                                const std::vector<long long>& rows) {
  Eigen::MatrixXf m(static_cast<Eigen::Index>(rows.size()), dataset.d);
  std::vector<LabeledToken> tokens;
  tokens.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = dataset.embeddings.row(rows[i]);
    LabeledToken token = dataset.tokens[static_cast<std::size_t>(rows[i])];
    token.row_index = static_cast<long long>(i);
    tokens.push_back(std::move(token));
  }
  return make_dataset(std::move(m), std::move(tokens));
}

}  // namespace morphoscope
