#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace delaylab {

// One sparse example: strictly increasing 0-based feature indices.
struct Sample {
  std::vector<std::pair<int, double>> features;
  double label = 0.0;

  double dot(const double* w) const {
    double s = 0.0;
    for (const auto& [idx, val] : features) s += val * w[idx];
    return s;
  }
};

struct Dataset {
  std::vector<Sample> samples;
  int dim = 0;
  std::string name;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, long line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  explicit ParseError(const std::string& msg) : std::runtime_error(msg), line_(0) {}
  long line() const { return line_; }

 private:
  long line_;
};

// LIBSVM text: `<label> <idx>:<val> ...`, 1-based strictly increasing indices,
// `#` starts a comment. Indices are stored 0-based. dim is the max index + 1
// unless dim_override >= 0.
Dataset parse_libsvm(std::istream& in, const std::string& name = "",
                     int dim_override = -1);
Dataset parse_libsvm(const std::string& text, const std::string& name = "",
                     int dim_override = -1);
Dataset load_libsvm_file(const std::string& path, int dim_override = -1);

// Inverse of parse_libsvm: 1-based indices, shortest round-trip decimals.
void serialize_libsvm(const Dataset& ds, std::ostream& out);
std::string serialize_libsvm(const Dataset& ds);

// Seeded shuffle; first ceil(train_fraction * n) samples become the train set.
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

struct SpectrumSpec {
  enum class Kind { Uniform, Geometric, Explicit };
  Kind kind = Kind::Uniform;
  double a_min = 0.1, a_max = 1.0;  // Uniform: linearly spaced [a_max..a_min]
  double ratio = 0.9;               // Geometric: a_max * ratio^j
  std::vector<double> explicit_values;

  static SpectrumSpec uniform(double lo, double hi);
  static SpectrumSpec geometric(double a_max, double ratio);
  static SpectrumSpec explicit_list(std::vector<double> values);

  // The d target eigenvalues; throws on any negative entry.
  std::vector<double> values(int d) const;
  std::string describe() const;
};

// Draws x_i = Q diag(sqrt(a_j)) g_i with a seeded random orthogonal Q and
// standard normal g_i, labels y_i = x_i' w* + noise with ||w*|| = 1.
Dataset synth_quadratic(int d, long n, const SpectrumSpec& spectrum,
                        double label_noise_std, std::uint64_t seed);

}  // namespace delaylab
