#pragma once

// CSV tables, atomic file output, and the seeded generator used by the
// randomized property suites.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <system_error>
#include <vector>

#include "pvi/errors.hpp"
#include "pvi/format.hpp"
#include "pvi/painleve_models.hpp"

namespace pvi {

/// Column-oriented CSV builder. Complex columns expand to `name_re,name_im`.
class CsvTable {
 public:
  CsvTable& real_column(const std::string& name) {
    header_.push_back(name);
    return *this;
  }
  CsvTable& complex_column(const std::string& name) {
    header_.push_back(name + "_re");
    header_.push_back(name + "_im");
    return *this;
  }

  class Row {
   public:
    Row& operator<<(double x) {
      cells_.push_back(format_double(x));
      return *this;
    }
    Row& operator<<(cplx z) {
      cells_.push_back(format_double(z.real()));
      cells_.push_back(format_double(z.imag()));
      return *this;
    }
    Row& operator<<(const VecC& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) *this << v[i];
      return *this;
    }
    Row& operator<<(long n) {
      cells_.push_back(std::to_string(n));
      return *this;
    }
    Row& operator<<(int n) { return *this << static_cast<long>(n); }
    Row& operator<<(const std::string& s) {
      cells_.push_back(s);
      return *this;
    }
    Row& operator<<(const char* s) { return *this << std::string(s); }

   private:
    friend class CsvTable;
    std::vector<std::string> cells_;
  };

  void add(const Row& r) {
    if (r.cells_.size() != header_.size()) {
      throw ValidationError("CSV row has " + std::to_string(r.cells_.size()) + " cells, header has " +
                            std::to_string(header_.size()));
    }
    rows_.push_back(r.cells_);
  }

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t rows() const noexcept { return rows_.size(); }

  std::string str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out.push_back(',');
        out += cells[i];
      }
      out.push_back('\n');
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// `s, tau, u0..u{N-1}, v0..v{N-1}, H` with complex columns split.
inline CsvTable trajectory_table(const Trajectory& traj) {
  CsvTable t;
  t.real_column("s").complex_column("tau");
  const Eigen::Index n = traj.size() ? traj[0].state.size() : 0;
  for (Eigen::Index j = 0; j < n; ++j) t.complex_column("u" + std::to_string(j));
  for (Eigen::Index j = 0; j < n; ++j) t.complex_column("v" + std::to_string(j));
  t.complex_column("H");
  for (const auto& smp : traj.samples) {
    CsvTable::Row r;
    r << smp.s << smp.state.tau << smp.state.u << smp.state.v << smp.H;
    t.add(r);
  }
  return t;
}

/// Writes via a sibling temporary file and rename, so readers never observe
/// a partially written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ValidationError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw ValidationError("cannot rename '" + tmp.string() + "': " + ec.message());
  }
}

/// Park–Miller minimal standard generator x ← 48271·x mod (2³¹ − 1)
/// (std::minstd_rand). Uniform deviates are (x − 1)/(2³¹ − 2) ∈ [0, 1).
/// The mapping is written out so that other implementations can reproduce
/// the stream exactly; std::uniform_real_distribution is not portable.
class Lcg {
 public:
  explicit Lcg(std::uint64_t seed) : engine_(static_cast<std::uint_fast32_t>(seed % 2147483646ULL + 1ULL)) {}

  std::uint32_t next_raw() { return static_cast<std::uint32_t>(engine_()); }

  double uniform() { return static_cast<double>(next_raw() - 1U) / 2147483646.0; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  cplx complex_in_box(double re0, double re1, double im0, double im1) {
    const double re = uniform(re0, re1);
    return {re, uniform(im0, im1)};
  }

 private:
  std::minstd_rand engine_;
};

}  // namespace pvi
