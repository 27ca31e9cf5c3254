#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kvqe/common.hpp"

namespace kvqe {

enum class Spin : std::uint8_t { alpha = 0, beta = 1 };
enum class Occupancy : std::uint8_t { occupied, virtual_ };

/// Spin orbital in the interleaved qubit layout: qubit 2p is p-alpha, 2p+1 is
/// p-beta.
struct SpinOrbital {
  int spatial_index = 0;
  Spin spin = Spin::alpha;
  int k_index = 0;
  Occupancy occ = Occupancy::virtual_;

  [[nodiscard]] int qubit() const { return 2 * spatial_index + (spin == Spin::beta ? 1 : 0); }

  static SpinOrbital from_qubit(int q) {
    return SpinOrbital{q / 2, (q % 2) ? Spin::beta : Spin::alpha, 0, Occupancy::virtual_};
  }
};

inline int spin_orbital(int spatial, Spin s) { return 2 * spatial + (s == Spin::beta ? 1 : 0); }

/// Creation (dagger) or annihilation operator on one qubit mode.
struct Ladder {
  int mode = 0;
  bool dagger = false;

  auto operator<=>(const Ladder &) const = default;
};

inline Ladder cre(int mode) { return {mode, true}; }
inline Ladder ann(int mode) { return {mode, false}; }

using FermionTerm = std::vector<Ladder>;

/// Complex linear combination of ladder-operator products, stored in
/// normal order: creations first, then annihilations, each group sorted by
/// descending mode. Terms with |c| < kPruneThreshold are dropped.
class FermionOperator {
public:
  using TermMap = std::map<FermionTerm, cplx>;

  FermionOperator() = default;

  static FermionOperator identity(cplx c = 1.0) {
    FermionOperator op;
    op.add_normal_ordered(FermionTerm{}, c);
    return op;
  }

  static FermionOperator term(const FermionTerm &factors, cplx c = 1.0) {
    FermionOperator op;
    op.add_term(factors, c);
    return op;
  }

  static FermionOperator term(std::initializer_list<Ladder> factors, cplx c = 1.0) {
    return term(FermionTerm(factors), c);
  }

  /// Adds c * (product of factors), normal ordering it first.
  void add_term(const FermionTerm &factors, cplx c) {
    if (std::abs(c) < kPruneThreshold)
      return;
    normal_order_into(factors, c, *this);
  }

  [[nodiscard]] const TermMap &terms() const { return terms_; }
  [[nodiscard]] bool empty() const { return terms_.empty(); }
  [[nodiscard]] std::size_t size() const { return terms_.size(); }

  /// Largest number of ladder factors in any term.
  [[nodiscard]] std::size_t max_order() const {
    std::size_t m = 0;
    for (const auto &[t, c] : terms_)
      m = std::max(m, t.size());
    return m;
  }

  [[nodiscard]] int max_mode() const {
    int m = -1;
    for (const auto &[t, c] : terms_)
      for (const auto &l : t)
        m = std::max(m, l.mode);
    return m;
  }

  [[nodiscard]] FermionOperator dagger() const {
    FermionOperator out;
    for (const auto &[t, c] : terms_) {
      FermionTerm rev;
      rev.reserve(t.size());
      for (auto it = t.rbegin(); it != t.rend(); ++it)
        rev.push_back({it->mode, !it->dagger});
      out.add_term(rev, std::conj(c));
    }
    return out;
  }

  FermionOperator &operator+=(const FermionOperator &o) {
    for (const auto &[t, c] : o.terms_)
      add_normal_ordered(t, c);
    return *this;
  }
  FermionOperator &operator-=(const FermionOperator &o) {
    for (const auto &[t, c] : o.terms_)
      add_normal_ordered(t, -c);
    return *this;
  }
  FermionOperator &operator*=(cplx s) {
    if (std::abs(s) == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= s;
      if (std::abs(it->second) < kPruneThreshold)
        it = terms_.erase(it);
      else
        ++it;
    }
    return *this;
  }

  friend FermionOperator operator+(FermionOperator a, const FermionOperator &b) { return a += b; }
  friend FermionOperator operator-(FermionOperator a, const FermionOperator &b) { return a -= b; }
  friend FermionOperator operator*(FermionOperator a, cplx s) { return a *= s; }
  friend FermionOperator operator*(cplx s, FermionOperator a) { return a *= s; }

  friend FermionOperator operator*(const FermionOperator &a, const FermionOperator &b) {
    FermionOperator out;
    for (const auto &[ta, ca] : a.terms_)
      for (const auto &[tb, cb] : b.terms_) {
        FermionTerm t = ta;
        t.insert(t.end(), tb.begin(), tb.end());
        out.add_term(t, ca * cb);
      }
    return out;
  }

  /// Sum of squared coefficient magnitudes.
  [[nodiscard]] double coefficient_norm2() const {
    double s = 0.0;
    for (const auto &[t, c] : terms_)
      s += std::norm(c);
    return s;
  }

  /// Max |coefficient| of (a - b).
  friend double max_difference(const FermionOperator &a, const FermionOperator &b) {
    double m = 0.0;
    for (const auto &[t, c] : (a - b).terms_)
      m = std::max(m, std::abs(c));
    return m;
  }

  [[nodiscard]] bool is_anti_hermitian(double tol = 1e-12) const {
    return max_difference(dagger(), *this * cplx(-1.0)) <= tol;
  }
  [[nodiscard]] bool is_hermitian(double tol = 1e-12) const { return max_difference(dagger(), *this) <= tol; }

  [[nodiscard]] std::string to_string() const {
    std::ostringstream os;
    bool first = true;
    for (const auto &[t, c] : terms_) {
      if (!first)
        os << " + ";
      first = false;
      os << "(" << c.real() << (c.imag() < 0 ? "" : "+") << c.imag() << "i)";
      for (const auto &l : t)
        os << " " << l.mode << (l.dagger ? "^" : "");
    }
    return first ? "0" : os.str();
  }

private:
  void add_normal_ordered(const FermionTerm &t, cplx c) {
    auto [it, inserted] = terms_.try_emplace(t, c);
    if (!inserted)
      it->second += c;
    if (std::abs(it->second) < kPruneThreshold)
      terms_.erase(it);
  }

  // Bubble sort into normal order using {a_p, a^dag_q} = delta_pq; every
  // contraction spawns an extra lower-order term handled recursively.
  static void normal_order_into(FermionTerm t, cplx c, FermionOperator &out) {
    for (std::size_t pass = 0; pass < t.size(); ++pass) {
      for (std::size_t j = t.size(); j-- > 1;) {
        Ladder &left = t[j - 1];
        Ladder &right = t[j];
        if (!left.dagger && right.dagger) {
          if (left.mode == right.mode) {
            FermionTerm contracted;
            contracted.reserve(t.size() - 2);
            contracted.insert(contracted.end(), t.begin(), t.begin() + static_cast<long>(j) - 1);
            contracted.insert(contracted.end(), t.begin() + static_cast<long>(j) + 1, t.end());
            normal_order_into(std::move(contracted), c, out);
          }
          std::swap(left, right);
          c = -c;
        } else if (left.dagger == right.dagger) {
          if (left.mode == right.mode)
            return; // a_p a_p = 0
          if (left.mode < right.mode) {
            std::swap(left, right);
            c = -c;
          }
        }
      }
    }
    out.add_normal_ordered(t, c);
  }

  TermMap terms_;
};

/// Pauli string in letter form: qubit j carries X if only x-bit j is set, Z if
/// only z-bit j, Y if both. The operator is the tensor product of letters.
struct PauliString {
  std::uint64_t x = 0;
  std::uint64_t z = 0;

  auto operator<=>(const PauliString &) const = default;

  [[nodiscard]] int y_count() const { return std::popcount(x & z); }

  [[nodiscard]] char letter(int q) const {
    const bool bx = (x >> q) & 1U;
    const bool bz = (z >> q) & 1U;
    return bx ? (bz ? 'Y' : 'X') : (bz ? 'Z' : 'I');
  }

  [[nodiscard]] std::string to_string(int n_qubits) const {
    std::string s;
    for (int q = 0; q < n_qubits; ++q)
      if (char c = letter(q); c != 'I') {
        if (!s.empty())
          s += ' ';
        s += c;
        s += std::to_string(q);
      }
    return s.empty() ? "I" : s;
  }

  static PauliString parse(const std::string &letters) {
    PauliString p;
    for (std::size_t q = 0; q < letters.size(); ++q) {
      const auto bit = std::uint64_t{1} << q;
      switch (letters[q]) {
      case 'X': p.x |= bit; break;
      case 'Y': p.x |= bit; p.z |= bit; break;
      case 'Z': p.z |= bit; break;
      case 'I': break;
      default: throw InvalidInput("bad Pauli letter");
      }
    }
    return p;
  }
};

namespace detail {

inline cplx i_power(int k) {
  switch (((k % 4) + 4) % 4) {
  case 0: return {1, 0};
  case 1: return {0, 1};
  case 2: return {-1, 0};
  default: return {0, -1};
  }
}

} // namespace detail

/// Product of two letter-form strings: returns (phase, string).
inline std::pair<cplx, PauliString> multiply(const PauliString &a, const PauliString &b) {
  PauliString r{a.x ^ b.x, a.z ^ b.z};
  int k = a.y_count() + b.y_count() - r.y_count();
  if (std::popcount(a.z & b.x) % 2)
    k += 2;
  return {detail::i_power(k), r};
}

/// Action on a computational basis state: P|b> = phase * |b ^ x>.
inline cplx basis_phase(const PauliString &p, std::uint64_t b) {
  cplx ph = detail::i_power(p.y_count());
  return (std::popcount(p.z & b) % 2) ? -ph : ph;
}

class PauliSum {
public:
  using TermMap = std::map<PauliString, cplx>;

  PauliSum() = default;
  explicit PauliSum(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 0 || n_qubits > 62)
      throw InvalidInput("PauliSum supports 0..62 qubits");
  }

  static PauliSum identity(int n_qubits, cplx c = 1.0) {
    PauliSum s(n_qubits);
    s.add(PauliString{}, c);
    return s;
  }

  void add(const PauliString &p, cplx c) {
    if (n_qubits_ < 64 && ((p.x | p.z) >> n_qubits_) != 0)
      throw InvalidInput("Pauli string acts outside the register");
    auto [it, inserted] = terms_.try_emplace(p, c);
    if (!inserted)
      it->second += c;
    if (std::abs(it->second) < kPruneThreshold)
      terms_.erase(it);
  }

  [[nodiscard]] int n_qubits() const { return n_qubits_; }
  [[nodiscard]] const TermMap &terms() const { return terms_; }
  [[nodiscard]] std::size_t size() const { return terms_.size(); }
  [[nodiscard]] bool empty() const { return terms_.empty(); }

  [[nodiscard]] cplx coefficient(const PauliString &p) const {
    auto it = terms_.find(p);
    return it == terms_.end() ? cplx{} : it->second;
  }

  [[nodiscard]] bool is_hermitian(double tol = 1e-12) const {
    for (const auto &[p, c] : terms_)
      if (std::abs(c.imag()) > tol)
        return false;
    return true;
  }

  PauliSum &operator+=(const PauliSum &o) {
    check_same(o);
    for (const auto &[p, c] : o.terms_)
      add(p, c);
    return *this;
  }
  PauliSum &operator-=(const PauliSum &o) {
    check_same(o);
    for (const auto &[p, c] : o.terms_)
      add(p, -c);
    return *this;
  }
  PauliSum &operator*=(cplx s) {
    TermMap old;
    old.swap(terms_);
    for (const auto &[p, c] : old)
      add(p, c * s);
    return *this;
  }

  friend PauliSum operator+(PauliSum a, const PauliSum &b) { return a += b; }
  friend PauliSum operator-(PauliSum a, const PauliSum &b) { return a -= b; }
  friend PauliSum operator*(PauliSum a, cplx s) { return a *= s; }
  friend PauliSum operator*(cplx s, PauliSum a) { return a *= s; }

  friend PauliSum operator*(const PauliSum &a, const PauliSum &b) {
    a.check_same(b);
    PauliSum out(a.n_qubits_);
    for (const auto &[pa, ca] : a.terms_)
      for (const auto &[pb, cb] : b.terms_) {
        auto [ph, p] = multiply(pa, pb);
        out.add(p, ph * ca * cb);
      }
    return out;
  }

  [[nodiscard]] double max_abs_coefficient() const {
    double m = 0.0;
    for (const auto &[p, c] : terms_)
      m = std::max(m, std::abs(c));
    return m;
  }

private:
  void check_same(const PauliSum &o) const {
    if (o.n_qubits_ != n_qubits_)
      throw InvalidInput("PauliSum qubit count mismatch");
  }

  int n_qubits_ = 0;
  TermMap terms_;
};

/// Jordan-Wigner image of a single ladder operator:
/// a_j = Z_{<j} (X_j + i Y_j) / 2, a^dag_j = Z_{<j} (X_j - i Y_j) / 2.
inline PauliSum jordan_wigner(const Ladder &l, int n_qubits) {
  if (l.mode < 0 || l.mode >= n_qubits)
    throw InvalidInput("ladder mode " + std::to_string(l.mode) + " outside " + std::to_string(n_qubits) +
                       " qubits");
  const std::uint64_t bit = std::uint64_t{1} << l.mode;
  const std::uint64_t below = bit - 1;
  PauliSum s(n_qubits);
  s.add(PauliString{bit, below}, 0.5);
  s.add(PauliString{bit, below | bit}, l.dagger ? cplx(0, -0.5) : cplx(0, 0.5));
  return s;
}

inline PauliSum jordan_wigner(const FermionOperator &op, int n_qubits) {
  PauliSum out(n_qubits);
  for (const auto &[t, c] : op.terms()) {
    PauliSum prod = PauliSum::identity(n_qubits, c);
    for (const auto &l : t)
      prod = prod * jordan_wigner(l, n_qubits);
    out += prod;
  }
  return out;
}

/// tau = T - T^dag.
inline FermionOperator anti_hermitian(const FermionOperator &t) { return t - t.dagger(); }

/// Excitation operator T^{p...}_{...s}: creations in the given order followed
/// by annihilations in the given order.
inline FermionOperator excitation(const std::vector<int> &creations, const std::vector<int> &annihilations,
                                  cplx c = 1.0) {
  FermionTerm t;
  for (int m : creations)
    t.push_back(cre(m));
  for (int m : annihilations)
    t.push_back(ann(m));
  return FermionOperator::term(t, c);
}

inline FermionOperator number_operator(int n_qubits) {
  FermionOperator n;
  for (int q = 0; q < n_qubits; ++q)
    n += FermionOperator::term({cre(q), ann(q)});
  return n;
}

/// S_z = (N_alpha - N_beta) / 2 in the interleaved layout.
inline FermionOperator sz_operator(int n_qubits) {
  FermionOperator s;
  for (int q = 0; q < n_qubits; ++q)
    s += FermionOperator::term({cre(q), ann(q)}, (q % 2 == 0) ? 0.5 : -0.5);
  return s;
}

} // namespace kvqe
