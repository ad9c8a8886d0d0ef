#pragma once

// Shared utilities: error types, small dense matrices, deterministic RNG
// streams, numeric formatting, and a bounded thread pool for sweeps.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ek {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Errors

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FeasibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Small dense matrix (row-major)

struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(size_t(r) * c, fill) {}

  double& operator()(int i, int j) { return a[size_t(i) * cols + j]; }
  double operator()(int i, int j) const { return a[size_t(i) * cols + j]; }
  bool empty() const { return a.empty(); }

  bool symmetric(double tol = 1e-12) const {
    if (rows != cols) return false;
    for (int i = 0; i < rows; ++i)
      for (int j = i + 1; j < cols; ++j)
        if (std::fabs((*this)(i, j) - (*this)(j, i)) > tol) return false;
    return true;
  }

  Matrix symmetrized() const {
    Matrix s(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) s(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
    return s;
  }

  // y = M x
  void multiply(const double* x, double* y) const {
    for (int i = 0; i < rows; ++i) {
      double s = 0.0;
      const double* row = &a[size_t(i) * cols];
      for (int j = 0; j < cols; ++j) s += row[j] * x[j];
      y[i] = s;
    }
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::fabs(v));
    return m;
  }
};

// ---------------------------------------------------------------------------
// Deterministic seed derivation (splitmix64)

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream seed for (global seed, grid point, restart index); stable under any
// execution order of a parallel sweep.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t point, std::uint64_t start) {
  std::uint64_t h = splitmix64(seed ^ 0x243f6a8885a308d3ULL);
  h = splitmix64(h ^ point);
  h = splitmix64(h ^ (start + 0x1000193ULL));
  return h;
}

// ---------------------------------------------------------------------------
// Numeric helpers

inline double log_sum_exp(const std::vector<double>& v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// x log x with the continuous extension 0 log 0 = 0.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

inline double max_norm_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return kInf;
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw ConfigError("malformed number: '" + s + "'");
  return v;
}

// Uniform grid "lo:hi:count" with count >= 2 and lo < hi.
inline std::vector<double> parse_grid(const std::string& spec) {
  size_t c1 = spec.find(':');
  size_t c2 = (c1 == std::string::npos) ? std::string::npos : spec.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw ConfigError("grid spec must be lo:hi:count, got '" + spec + "'");
  double lo = parse_double(spec.substr(0, c1));
  double hi = parse_double(spec.substr(c1 + 1, c2 - c1 - 1));
  long count = std::strtol(spec.substr(c2 + 1).c_str(), nullptr, 10);
  if (count < 2) throw ConfigError("grid count must be >= 2 in '" + spec + "'");
  if (!(lo < hi)) throw ConfigError("grid requires lo < hi in '" + spec + "'");
  std::vector<double> g(size_t(count), 0.0);
  for (long i = 0; i < count; ++i) g[size_t(i)] = lo + (hi - lo) * double(i) / double(count - 1);
  return g;
}

inline std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> g(size_t(count), 0.0);
  for (int i = 0; i < count; ++i) g[size_t(i)] = lo + (hi - lo) * double(i) / double(count - 1);
  return g;
}

// ---------------------------------------------------------------------------
// Bounded parallel sweep. ENSEMBLEKIT_THREADS caps the worker count; results
// must be written by index so the outcome is independent of scheduling.

inline int max_threads() {
  static int cached = [] {
    const char* env = std::getenv("ENSEMBLEKIT_THREADS");
    if (env != nullptr) {
      long v = std::strtol(env, nullptr, 10);
      if (v >= 1) return int(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
  }();
  return cached;
}

template <typename Fn>
void parallel_for(size_t n, Fn&& fn) {
  int workers = std::min<size_t>(size_t(max_threads()), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error = nullptr;
  std::mutex err_mutex;
  std::atomic<size_t> next{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ek
