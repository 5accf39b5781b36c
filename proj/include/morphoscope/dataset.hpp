#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "morphoscope/probe.hpp"

namespace morphoscope {

enum class Split { train = 0, validation = 1, test = 2 };
inline constexpr int kNumSplits = 3;

const char* split_name(Split s);
std::optional<Split> parse_split(const std::string& name);

struct LabeledToken {
  long long row_index = 0;
  std::string word_form;  // may be empty
  Split split = Split::train;
  // attribute -> value, at most one value per attribute, kept in file order
  std::vector<std::pair<std::string, std::string>> tag;

  const std::string* value_of(const std::string& attribute) const;
};

struct ValueCounts {
  std::array<long long, kNumSplits> types{0, 0, 0};
  std::array<long long, kNumSplits> tokens{0, 0, 0};
};

struct AttributeEntry {
  std::map<std::string, ValueCounts> values;
  bool has_word_forms = false;  // any non-empty word form among carrying rows
};

struct EmbeddingDataset {
  Eigen::MatrixXf embeddings;  // N x d, row per token
  std::vector<LabeledToken> tokens;
  int d = 0;
  std::map<std::string, AttributeEntry> registry;
  std::string dataset_id;  // content hash, stable across file/memory round trips

  long long rows() const { return static_cast<long long>(tokens.size()); }
};

// Validates row counts and finiteness, canonicalizes tags, builds the
// registry and content hash. The embeddings matrix is taken as-is.
EmbeddingDataset make_dataset(Eigen::MatrixXf embeddings, std::vector<LabeledToken> tokens);

EmbeddingDataset load_dataset(const std::string& matrix_path, const std::string& labels_path);

// Binary matrix format: magic "IPRB", u16 version 1, u64 N, u32 d, then
// N*d float32 row-major, all little-endian.
void write_matrix(const std::string& path, const Eigen::Ref<const Eigen::MatrixXf>& m);
Eigen::MatrixXf read_matrix(const std::string& path);

// Labels TSV: header `index	split	word_form	tag`; tag is a ';'-separated
// list of Attribute=VALUE pairs.
void write_labels(const std::string& path, const std::vector<LabeledToken>& tokens);
std::vector<LabeledToken> read_labels(const std::string& path);

struct FilterResult {
  AttributeSchema schema;  // surviving values, alphabetical
  bool attribute_excluded = false;  // fewer than 2 values survived
  bool token_fallback = false;      // no word forms; counted tokens instead
  std::vector<std::pair<std::string, std::string>> dropped;  // value -> reason
  std::array<std::vector<long long>, kNumSplits> rows;       // per split, rows with surviving values
};

// Drops values with fewer than `min_types` distinct word forms in any split,
// and the whole attribute when fewer than two values survive.
FilterResult filter_attribute_values(const EmbeddingDataset& dataset,
                                     const std::string& attribute, long long min_types = 100);

// Applies the annotation canonicalization rules to a single feature value:
// reject disjunctions, strip brace typos, keep "PST+PRF" whole, sort
// conjunctive features, drop language-specific (LGSPEC*) features.
// Returns nullopt when the annotation is rejected/dropped; throws InvalidTag
// when a conjunction spans two different attributes.
std::optional<std::string> canonicalize_tag(const std::string& raw);

// Probe-ready rows of one split, restricted to a schema's values.
struct AttributeView {
  Mat X;               // rows cast to double
  std::vector<int> y;  // value indices into the schema
  std::vector<long long> row_indices;
};

AttributeView make_view(const EmbeddingDataset& dataset, const AttributeSchema& schema,
                        Split split);

// Materializes the subset of a dataset at the given rows (all splits kept).
EmbeddingDataset subset_dataset(const EmbeddingDataset& dataset,
                                const std::vector<long long>& rows);

}  // namespace morphoscope
