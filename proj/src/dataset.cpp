#include "delaylab/dataset.hpp"

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "delaylab/common.hpp"

namespace delaylab {

namespace {

// Strips a trailing comment and surrounding whitespace.
std::string_view strip(std::string_view line) {
  if (auto pos = line.find('#'); pos != std::string_view::npos) {
    line = line.substr(0, pos);
  }
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front())))
    line.remove_prefix(1);
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
    line.remove_suffix(1);
  return line;
}

double parse_number(std::string_view tok, const char* what, long line_no) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError(std::string("malformed ") + what + " '" + std::string(tok) + "'",
                     line_no);
  }
  if (!std::isfinite(v)) {
    throw ParseError(std::string("non-finite ") + what + " '" + std::string(tok) + "'",
                     line_no);
  }
  return v;
}

long parse_index(std::string_view tok, long line_no) {
  long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError("malformed feature index '" + std::string(tok) + "'", line_no);
  }
  return v;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const std::string& name, int dim_override) {
  Dataset ds;
  ds.name = name;
  std::string raw;
  long line_no = 0;
  int max_index = -1;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = strip(raw);
    if (line.empty()) continue;

    Sample sample;
    std::istringstream tokens{std::string(line)};
    std::string tok;
    tokens >> tok;
    sample.label = parse_number(tok, "label", line_no);

    long prev_index = 0;  // wire indices are 1-based
    while (tokens >> tok) {
      auto colon = tok.find(':');
      if (colon == std::string::npos) {
        throw ParseError("expected idx:val pair, got '" + tok + "'", line_no);
      }
      long idx = parse_index(std::string_view(tok).substr(0, colon), line_no);
      if (idx < 1) {
        throw ParseError("feature index " + std::to_string(idx) + " is not >= 1",
                         line_no);
      }
      if (idx <= prev_index) {
        throw ParseError("feature index " + std::to_string(idx) +
                             " not strictly increasing",
                         line_no);
      }
      double val =
          parse_number(std::string_view(tok).substr(colon + 1), "feature value",
                       line_no);
      sample.features.emplace_back(static_cast<int>(idx - 1), val);
      prev_index = idx;
    }
    max_index = std::max(max_index, static_cast<int>(prev_index - 1));
    ds.samples.push_back(std::move(sample));
  }
  if (ds.samples.empty()) {
    throw ParseError("empty input");
  }
  ds.dim = dim_override >= 0 ? dim_override : max_index + 1;
  if (dim_override >= 0 && max_index >= dim_override) {
    throw ParseError("feature index " + std::to_string(max_index + 1) +
                     " exceeds declared dimension " + std::to_string(dim_override));
  }
  return ds;
}

Dataset parse_libsvm(const std::string& text, const std::string& name,
                     int dim_override) {
  std::istringstream in(text);
  return parse_libsvm(in, name, dim_override);
}

Dataset load_libsvm_file(const std::string& path, int dim_override) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  auto slash = path.find_last_of('/');
  return parse_libsvm(in, slash == std::string::npos ? path : path.substr(slash + 1),
                      dim_override);
}

void serialize_libsvm(const Dataset& ds, std::ostream& out) {
  for (const auto& sample : ds.samples) {
    out << format_double(sample.label);
    for (const auto& [idx, val] : sample.features) {
      out << ' ' << (idx + 1) << ':' << format_double(val);
    }
    out << '\n';
  }
}

std::string serialize_libsvm(const Dataset& ds) {
  std::ostringstream out;
  serialize_libsvm(ds, out);
  return out.str();
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  if (ds.size() < 2) {
    throw std::invalid_argument("split needs at least 2 samples");
  }
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must be in (0,1)");
  }
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(spec.seed);
  fisher_yates(order, rng);

  const auto train_n = static_cast<std::size_t>(
      std::ceil(spec.train_fraction * static_cast<double>(ds.size())));
  Dataset train, test;
  train.dim = test.dim = ds.dim;
  train.name = ds.name + ".train";
  test.name = ds.name + ".test";
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < train_n ? train : test).samples.push_back(ds.samples[order[k]]);
  }
  return {std::move(train), std::move(test)};
}

SpectrumSpec SpectrumSpec::uniform(double lo, double hi) {
  SpectrumSpec s;
  s.kind = Kind::Uniform;
  s.a_min = lo;
  s.a_max = hi;
  return s;
}

SpectrumSpec SpectrumSpec::geometric(double a_max, double ratio) {
  SpectrumSpec s;
  s.kind = Kind::Geometric;
  s.a_max = a_max;
  s.ratio = ratio;
  return s;
}

SpectrumSpec SpectrumSpec::explicit_list(std::vector<double> values) {
  SpectrumSpec s;
  s.kind = Kind::Explicit;
  s.explicit_values = std::move(values);
  return s;
}

std::vector<double> SpectrumSpec::values(int d) const {
  std::vector<double> out;
  switch (kind) {
    case Kind::Uniform:
      out.resize(d);
      for (int j = 0; j < d; ++j) {
        out[j] = d == 1 ? a_max
                        : a_max - (a_max - a_min) * static_cast<double>(j) /
                                      static_cast<double>(d - 1);
      }
      break;
    case Kind::Geometric:
      out.resize(d);
      for (int j = 0; j < d; ++j) out[j] = a_max * std::pow(ratio, j);
      break;
    case Kind::Explicit:
      if (static_cast<int>(explicit_values.size()) != d) {
        throw std::invalid_argument("explicit spectrum has " +
                                    std::to_string(explicit_values.size()) +
                                    " values, expected " + std::to_string(d));
      }
      out = explicit_values;
      break;
  }
  for (double a : out) {
    if (!(a >= 0.0)) {
      throw std::invalid_argument("spectrum values must be nonnegative");
    }
  }
  return out;
}

std::string SpectrumSpec::describe() const {
  switch (kind) {
    case Kind::Uniform:
      return "uniform(" + format_double(a_min) + "," + format_double(a_max) + ")";
    case Kind::Geometric:
      return "geometric(" + format_double(a_max) + "," + format_double(ratio) + ")";
    case Kind::Explicit: {
      std::string s = "explicit(";
      for (std::size_t i = 0; i < explicit_values.size(); ++i) {
        if (i) s += ',';
        s += format_double(explicit_values[i]);
      }
      return s + ")";
    }
  }
  return "";
}

Dataset synth_quadratic(int d, long n, const SpectrumSpec& spectrum,
                        double label_noise_std, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("synth_quadratic: d must be >= 1");
  if (n < 1) throw std::invalid_argument("synth_quadratic: n must be >= 1");
  const std::vector<double> spec = spectrum.values(d);

  std::mt19937_64 rng(seed);
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = standard_normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  // fix the sign convention so Q is a deterministic function of g
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }

  Eigen::VectorXd wstar(d);
  for (int j = 0; j < d; ++j) wstar(j) = standard_normal(rng);
  wstar.normalize();

  Eigen::VectorXd sqrt_spec(d);
  for (int j = 0; j < d; ++j) sqrt_spec(j) = std::sqrt(spec[j]);

  Dataset ds;
  ds.dim = d;
  ds.name = "synth-d" + std::to_string(d) + "-n" + std::to_string(n);
  ds.samples.reserve(n);
  Eigen::VectorXd gi(d);
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) gi(j) = standard_normal(rng);
    Eigen::VectorXd x = q * sqrt_spec.cwiseProduct(gi).eval();
    Sample sample;
    sample.features.reserve(d);
    for (int j = 0; j < d; ++j) sample.features.emplace_back(j, x(j));
    sample.label = x.dot(wstar);
    if (label_noise_std > 0.0) sample.label += label_noise_std * standard_normal(rng);
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

}  // namespace delaylab
