#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "kvqe/common.hpp"
#include "kvqe/operators.hpp"

namespace kvqe {

inline constexpr int kMaxStateQubits = 30;

/// Sorted set of computational basis states. Operators compiled on a sector
/// only produce output rows inside it.
struct Sector {
  int n_qubits = 0;
  std::vector<std::uint32_t> states;

  static Sector full(int n_qubits) {
    check_size(n_qubits);
    Sector s{n_qubits, {}};
    s.states.resize(std::size_t{1} << n_qubits);
    for (std::size_t i = 0; i < s.states.size(); ++i)
      s.states[i] = static_cast<std::uint32_t>(i);
    return s;
  }

  /// Basis states with nelec set bits and (alpha - beta) = ms2, where even
  /// qubits are alpha.
  static Sector particles(int n_qubits, int nelec, int ms2) {
    check_size(n_qubits);
    constexpr std::uint32_t even = 0x55555555u;
    Sector s{n_qubits, {}};
    const std::uint32_t dim = std::uint32_t{1} << n_qubits;
    for (std::uint32_t b = 0; b < dim; ++b) {
      if (std::popcount(b) != nelec)
        continue;
      const int na = std::popcount(b & even);
      if (na - (nelec - na) == ms2)
        s.states.push_back(b);
    }
    return s;
  }

  [[nodiscard]] std::size_t size() const { return states.size(); }

  [[nodiscard]] std::optional<std::size_t> position(std::uint32_t b) const {
    auto it = std::lower_bound(states.begin(), states.end(), b);
    if (it == states.end() || *it != b)
      return std::nullopt;
    return static_cast<std::size_t>(it - states.begin());
  }

  static void check_size(int n) {
    if (n < 0 || n > kMaxStateQubits)
      throw InvalidInput("statevector simulation supports at most 30 qubits");
  }
};

/// Row-compressed operator whose rows are restricted to a sector; column
/// indices are global basis states.
class SparseOperator {
public:
  SparseOperator() = default;

  [[nodiscard]] int n_qubits() const { return n_qubits_; }
  [[nodiscard]] std::size_t nnz() const { return vals_.size(); }
  [[nodiscard]] std::span<const std::uint32_t> rows() const { return rows_; }

  /// Compiles a Pauli sum by grouping strings with equal X-part; the entry
  /// in row r, column r^x is sum_t c_t i^{ny_t} (-1)^{|z_t & (r^x)|}.
  static SparseOperator from_pauli(const PauliSum &op, const Sector &sector) {
    check_register(op.n_qubits(), sector);
    struct Group {
      std::uint32_t x;
      std::vector<std::pair<std::uint32_t, cplx>> zc;
    };
    std::map<std::uint32_t, Group> groups;
    for (const auto &[p, c] : op.terms()) {
      auto &g = groups[static_cast<std::uint32_t>(p.x)];
      g.x = static_cast<std::uint32_t>(p.x);
      g.zc.emplace_back(static_cast<std::uint32_t>(p.z), c * detail::i_power(p.y_count()));
    }
    std::vector<Group> glist;
    for (auto &[x, g] : groups)
      glist.push_back(std::move(g));
    return build(sector, [&](std::uint32_t r, std::vector<std::pair<std::uint32_t, cplx>> &out) {
      for (const auto &g : glist) {
        const std::uint32_t col = r ^ g.x;
        cplx v{};
        for (const auto &[z, c] : g.zc)
          v += (std::popcount(z & col) % 2) ? -c : c;
        if (std::abs(v) > kPruneThreshold)
          out.emplace_back(col, v);
      }
    });
  }

  /// Compiles a fermionic operator directly from its ladder products, without
  /// going through qubit operators. Row r collects <r|T|c> by applying T^dag
  /// to |r>.
  static SparseOperator from_fermion(const FermionOperator &op, const Sector &sector) {
    if (op.max_mode() >= sector.n_qubits)
      throw InvalidInput("fermion operator acts outside the register");
    struct Adj {
      std::vector<Ladder> ladders; // T^dag, applied right to left
      cplx coeff;                  // coefficient of T
    };
    std::vector<Adj> adj;
    for (const auto &[t, c] : op.terms()) {
      Adj a;
      a.coeff = c;
      for (auto it = t.rbegin(); it != t.rend(); ++it)
        a.ladders.push_back({it->mode, !it->dagger});
      adj.push_back(std::move(a));
    }
    return build(sector, [&](std::uint32_t r, std::vector<std::pair<std::uint32_t, cplx>> &out) {
      for (const auto &a : adj) {
        std::uint32_t b = r;
        bool negative = false;
        bool alive = true;
        for (auto it = a.ladders.rbegin(); it != a.ladders.rend(); ++it) {
          const std::uint32_t bit = std::uint32_t{1} << it->mode;
          if (((b & bit) != 0) == it->dagger) {
            alive = false;
            break;
          }
          if (std::popcount(b & (bit - 1)) % 2)
            negative = !negative;
          b ^= bit;
        }
        if (alive)
          out.emplace_back(b, negative ? -a.coeff : a.coeff);
      }
    });
  }

  /// sum_i coeffs[i] * ops[i]; all operators must share one sector.
  static SparseOperator combine(std::span<const double> coeffs, std::span<const SparseOperator *const> ops) {
    if (coeffs.size() != ops.size() || ops.empty())
      throw InvalidInput("combine: coefficient/operator count mismatch");
    SparseOperator out;
    out.n_qubits_ = ops[0]->n_qubits_;
    out.rows_ = ops[0]->rows_;
    for (const auto *o : ops)
      if (o->rows_.size() != out.rows_.size())
        throw InvalidInput("combine: sector mismatch");
    out.ptr_.assign(out.rows_.size() + 1, 0);
    std::vector<std::pair<std::uint32_t, cplx>> row;
    for (std::size_t i = 0; i < out.rows_.size(); ++i) {
      row.clear();
      for (std::size_t k = 0; k < ops.size(); ++k) {
        if (coeffs[k] == 0.0)
          continue;
        const auto *o = ops[k];
        for (std::size_t e = o->ptr_[i]; e < o->ptr_[i + 1]; ++e)
          row.emplace_back(o->cols_[e], coeffs[k] * o->vals_[e]);
      }
      out.append_row(row);
      out.ptr_[i + 1] = out.vals_.size();
    }
    return out;
  }

  /// out[r] = sum_c A[r][c] in[c] for every stored row r; other entries of
  /// `out` are left untouched.
  void apply(std::span<const cplx> in, std::span<cplx> out) const {
    parallel_for(rows_.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        cplx acc{};
        for (std::size_t k = ptr_[i]; k < ptr_[i + 1]; ++k)
          acc += vals_[k] * in[cols_[k]];
        out[rows_[i]] = acc;
      }
    });
  }

  [[nodiscard]] std::vector<cplx> apply(std::span<const cplx> in) const {
    std::vector<cplx> out(in.size());
    apply(in, out);
    return out;
  }

  /// Upper bound on the spectral norm: sqrt(max row sum * max column sum).
  /// Cached after the first call.
  [[nodiscard]] double norm_bound() const {
    if (norm_bound_ >= 0.0)
      return norm_bound_;
    double rmax = 0.0;
    std::vector<std::pair<std::uint32_t, double>> colsum;
    colsum.reserve(vals_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      double rs = 0.0;
      for (std::size_t k = ptr_[i]; k < ptr_[i + 1]; ++k) {
        rs += std::abs(vals_[k]);
        colsum.emplace_back(cols_[k], std::abs(vals_[k]));
      }
      rmax = std::max(rmax, rs);
    }
    std::sort(colsum.begin(), colsum.end());
    double cmax = 0.0;
    for (std::size_t i = 0; i < colsum.size();) {
      double acc = 0.0;
      std::size_t j = i;
      for (; j < colsum.size() && colsum[j].first == colsum[i].first; ++j)
        acc += colsum[j].second;
      cmax = std::max(cmax, acc);
      i = j;
    }
    norm_bound_ = std::sqrt(rmax * cmax);
    return norm_bound_;
  }

  /// Dense 2^n matrix (rows outside the sector are zero). Small systems only.
  [[nodiscard]] Eigen::MatrixXcd dense() const {
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n_qubits_);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t i = 0; i < rows_.size(); ++i)
      for (std::size_t k = ptr_[i]; k < ptr_[i + 1]; ++k)
        m(rows_[i], cols_[k]) += vals_[k];
    return m;
  }

  /// Matrix restricted to sector rows and columns, in sector order.
  [[nodiscard]] Eigen::MatrixXcd sector_matrix(const Sector &sector) const {
    const auto n = static_cast<Eigen::Index>(sector.size());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      auto ri = sector.position(rows_[i]);
      if (!ri)
        continue;
      for (std::size_t k = ptr_[i]; k < ptr_[i + 1]; ++k)
        if (auto ci = sector.position(cols_[k]))
          m(static_cast<Eigen::Index>(*ri), static_cast<Eigen::Index>(*ci)) += vals_[k];
    }
    return m;
  }

  /// Sparse matrix over sector rows and columns, in sector order. Entries
  /// whose column leaves the sector are dropped and counted in `dropped`.
  [[nodiscard]] Eigen::SparseMatrix<cplx, Eigen::RowMajor> sector_sparse(const Sector &sector,
                                                                        std::size_t *dropped = nullptr) const {
    std::size_t lost = 0;
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(vals_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      auto ri = sector.position(rows_[i]);
      if (!ri)
        continue;
      for (std::size_t k = ptr_[i]; k < ptr_[i + 1]; ++k)
        if (auto ci = sector.position(cols_[k]))
          trip.emplace_back(static_cast<int>(*ri), static_cast<int>(*ci), vals_[k]);
        else
          ++lost;
    }
    if (dropped)
      *dropped = lost;
    const auto n = static_cast<Eigen::Index>(sector.size());
    Eigen::SparseMatrix<cplx, Eigen::RowMajor> m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
  }

private:
  static void check_register(int n, const Sector &sector) {
    if (n != sector.n_qubits)
      throw InvalidInput("operator and sector qubit counts differ");
    Sector::check_size(n);
  }

  void append_row(std::vector<std::pair<std::uint32_t, cplx>> &row) {
    std::sort(row.begin(), row.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
    std::size_t i = 0;
    while (i < row.size()) {
      cplx v = row[i].second;
      std::size_t j = i + 1;
      while (j < row.size() && row[j].first == row[i].first)
        v += row[j++].second;
      if (std::abs(v) > kPruneThreshold) {
        cols_.push_back(row[i].first);
        vals_.push_back(v);
      }
      i = j;
    }
  }

  template <class RowFn>
  static SparseOperator build(const Sector &sector, RowFn &&fill) {
    SparseOperator op;
    op.n_qubits_ = sector.n_qubits;
    op.rows_ = sector.states;
    const std::size_t n = op.rows_.size();
    // Rows are filled per contiguous chunk and stitched in order.
    const std::size_t chunk = 2048;
    const std::size_t nchunks = (n + chunk - 1) / chunk;
    std::vector<SparseOperator> parts(nchunks);
    parallel_for(
        nchunks,
        [&](std::size_t c0, std::size_t c1) {
          std::vector<std::pair<std::uint32_t, cplx>> row;
          for (std::size_t c = c0; c < c1; ++c) {
            auto &part = parts[c];
            part.ptr_.push_back(0);
            for (std::size_t i = c * chunk; i < std::min(n, (c + 1) * chunk); ++i) {
              row.clear();
              fill(op.rows_[i], row);
              part.append_row(row);
              part.ptr_.push_back(part.vals_.size());
            }
          }
        },
        1);
    op.ptr_.assign(1, 0);
    for (auto &part : parts) {
      const std::size_t base = op.vals_.size();
      op.cols_.insert(op.cols_.end(), part.cols_.begin(), part.cols_.end());
      op.vals_.insert(op.vals_.end(), part.vals_.begin(), part.vals_.end());
      for (std::size_t k = 1; k < part.ptr_.size(); ++k)
        op.ptr_.push_back(base + part.ptr_[k]);
    }
    return op;
  }

  int n_qubits_ = 0;
  std::vector<std::uint32_t> rows_;
  std::vector<std::size_t> ptr_;
  std::vector<std::uint32_t> cols_;
  std::vector<cplx> vals_;
  mutable double norm_bound_ = -1.0;
};

inline double vector_norm(std::span<const cplx> v) {
  return std::sqrt(deterministic_sum<double>(v.size(), [&](std::size_t i) { return std::norm(v[i]); }));
}

inline cplx inner_product(std::span<const cplx> a, std::span<const cplx> b) {
  return deterministic_sum<cplx>(a.size(), [&](std::size_t i) { return std::conj(a[i]) * b[i]; });
}

/// exp(t A) v by a truncated Taylor series, split into s steps with
/// |t| * norm_bound(A) / s <= 1; each step stops once the last added term
/// falls below tol / s relative to |v|.
inline std::vector<cplx> expm_multiply(const SparseOperator &a, double t, std::span<const cplx> v,
                                       double tol = 1e-12) {
  std::vector<cplx> acc(v.begin(), v.end());
  if (t == 0.0)
    return acc;
  const double scale = std::abs(t) * a.norm_bound();
  if (scale == 0.0)
    return acc;
  const int steps = std::max(1, static_cast<int>(std::ceil(scale)));
  const double h = t / steps;
  const double vnorm = vector_norm(v);
  std::vector<cplx> term(v.size()), next(v.size());
  for (int step = 0; step < steps; ++step) {
    term = acc;
    for (int k = 1; k < 200; ++k) {
      std::fill(next.begin(), next.end(), cplx{});
      a.apply(term, next);
      const double f = h / k;
      for (std::size_t i = 0; i < next.size(); ++i) {
        next[i] *= f;
        acc[i] += next[i];
      }
      term.swap(next);
      if (vector_norm(term) <= tol * vnorm / steps)
        break;
    }
  }
  return acc;
}

using SectorMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// sqrt(max row sum * max column sum) of |A|, an upper bound on ||A||_2.
inline double norm_bound(const SectorMatrix &m) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(m.rows()), cols = Eigen::VectorXd::Zero(m.cols());
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (SectorMatrix::InnerIterator it(m, r); it; ++it) {
      rows(it.row()) += std::abs(it.value());
      cols(it.col()) += std::abs(it.value());
    }
  return m.nonZeros() ? std::sqrt(rows.maxCoeff() * cols.maxCoeff()) : 0.0;
}

/// Symmetry-conserving operator acting on sector coordinates.
struct CompactOperator {
  SectorMatrix matrix;
  double bound = 0.0;

  CompactOperator() = default;
  explicit CompactOperator(SectorMatrix m) : matrix(std::move(m)), bound(norm_bound(matrix)) {}

  /// Throws when the operator couples the sector to states outside it.
  static CompactOperator from(const SparseOperator &op, const Sector &sector) {
    std::size_t dropped = 0;
    CompactOperator c(op.sector_sparse(sector, &dropped));
    if (dropped)
      throw InvalidInput("operator does not conserve the symmetry sector");
    return c;
  }
  static CompactOperator from(const FermionOperator &op, const Sector &sector) {
    return from(SparseOperator::from_fermion(op, sector), sector);
  }

  [[nodiscard]] Eigen::Index dim() const { return matrix.rows(); }
};

inline Eigen::VectorXcd to_sector(std::span<const cplx> full, const Sector &sector) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(sector.size()));
  for (std::size_t i = 0; i < sector.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = full[sector.states[i]];
  return v;
}

inline std::vector<cplx> from_sector(const Eigen::VectorXcd &v, const Sector &sector) {
  std::vector<cplx> full(std::size_t{1} << sector.n_qubits);
  for (std::size_t i = 0; i < sector.size(); ++i)
    full[sector.states[i]] = v(static_cast<Eigen::Index>(i));
  return full;
}

/// exp(t A) v on sector coordinates; same series control as the full-register
/// version.
inline Eigen::VectorXcd expm_multiply(const CompactOperator &a, double t, const Eigen::VectorXcd &v,
                                      double tol = 1e-12) {
  Eigen::VectorXcd acc = v;
  const double scale = std::abs(t) * a.bound;
  if (t == 0.0 || scale == 0.0)
    return acc;
  const int steps = std::max(1, static_cast<int>(std::ceil(scale)));
  const double h = t / steps;
  const double vnorm = v.norm();
  Eigen::VectorXcd term, next;
  for (int step = 0; step < steps; ++step) {
    term = acc;
    for (int k = 1; k < 200; ++k) {
      next.noalias() = a.matrix * term;
      next *= h / k;
      acc += next;
      term.swap(next);
      if (term.norm() <= tol * vnorm / steps)
        break;
    }
  }
  return acc;
}

} // namespace kvqe
