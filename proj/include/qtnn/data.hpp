#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qtnn/numerics.hpp"

namespace qtnn {

/// Inputs in [0, 1] (samples×features) with one-hot labels (samples×classes).
struct LabeledDataset {
  Matrix inputs;
  Matrix labels_onehot;
  std::vector<std::string> class_names;
  std::size_t image_rows = 0;  // 0 when the features are not an image
  std::size_t image_cols = 0;

  std::size_t size() const noexcept { return inputs.rows(); }
  std::size_t num_classes() const noexcept { return labels_onehot.cols(); }
  /// Index of the 1 in each one-hot row.
  std::vector<std::size_t> labels() const;
  /// Rows [begin, begin + count).
  LabeledDataset slice(std::size_t begin, std::size_t count) const;
  /// Throws FormatError if any invariant is broken.
  void validate() const;
};

std::vector<std::string> digit_class_names();
std::vector<std::string> fashion_class_names();

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Pixels are flattened row-major and divided by 255.
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path,
                        std::vector<std::string> class_names = digit_class_names());

/// Inverse of load_idx; pixels are written as round(255·x).
void write_idx(const LabeledDataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

/// $QTNN_DATA_DIR, or "data" relative to the working directory.
std::filesystem::path data_dir();

/// Standard file names under `<root>/<subdir>`: split is "train" or "t10k".
LabeledDataset load_idx_split(const std::filesystem::path& root, const std::string& subdir,
                              const std::string& split, std::vector<std::string> class_names);

struct SentimentCorpus {
  std::vector<std::vector<std::size_t>> phrases;
  std::vector<int> labels;
  /// index → token; index 0 is the padding token.
  std::vector<std::string> vocab;
  std::map<std::string, std::size_t> index;

  std::size_t size() const noexcept { return phrases.size(); }
  std::size_t vocab_size() const noexcept { return vocab.size(); }
};

/// Parses `text,label` CSV. Lower-cases, splits on whitespace and assigns
/// vocabulary indices in first-appearance order starting at 1.
SentimentCorpus parse_sentiment(std::istream& in, const std::string& source = "<stream>");
SentimentCorpus load_sentiment(const std::filesystem::path& path);
/// Path of the corpus shipped with the repository.
std::filesystem::path bundled_sentiment_path();

/// Stratified 75/25 split: within each class, every fourth phrase (file
/// order) goes to the test part. Both parts share the full vocabulary.
std::pair<SentimentCorpus, SentimentCorpus> split_sentiment(const SentimentCorpus& corpus);

struct MgConfig {
  double beta = 0.2;
  double gamma = 0.1;
  double tau = 17.0;
  double q = 10.0;
  double dt = 0.1;
  std::size_t sample_every = 10;
  std::size_t transient = 1000;
  double x0 = 1.2;

  void validate() const;
};

/// Mackey–Glass samples before normalization. RK4 with step dt; the delayed
/// value at half steps comes from cubic Hermite interpolation of the stored
/// history (values and derivatives).
std::vector<double> mackey_glass_raw(const MgConfig& cfg, std::size_t n_samples);
/// mackey_glass_raw min-max rescaled to [0, 1] over the emitted window.
std::vector<double> mackey_glass(const MgConfig& cfg, std::size_t n_samples);
void normalize_minmax(std::vector<double>& series);

/// `t,x` rows.
void write_series_csv(const std::filesystem::path& path, std::span<const double> series);

}  // namespace qtnn
