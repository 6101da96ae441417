#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "horizon/errors.hpp"
#include "horizon/polynomial.hpp"
#include "horizon/vector_field.hpp"

namespace horizon {

/// Nested bracket over field indices (0 = drift, 1..d = controlled fields).
class BracketWord {
public:
  static BracketWord letter(int index) {
    BracketWord w;
    w.leaf_ = index;
    return w;
  }

  static BracketWord bracket(const BracketWord& a, const BracketWord& b) {
    BracketWord w;
    w.left_ = std::make_shared<const BracketWord>(a);
    w.right_ = std::make_shared<const BracketWord>(b);
    return w;
  }

  /// [i1, [i2, [..., [i_{k-1}, i_k]]]]
  static BracketWord right_normed(const std::vector<int>& leaves) {
    if (leaves.empty()) throw InvalidArgument("empty bracket word");
    BracketWord w = letter(leaves.back());
    for (auto it = leaves.rbegin() + 1; it != leaves.rend(); ++it) w = bracket(letter(*it), w);
    return w;
  }

  bool is_letter() const { return leaf_ >= 0; }
  int index() const { return leaf_; }
  const BracketWord& left() const { return *left_; }
  const BracketWord& right() const { return *right_; }

  int length() const { return is_letter() ? 1 : left_->length() + right_->length(); }

  std::vector<int> leaves() const {
    if (is_letter()) return {leaf_};
    auto a = left_->leaves();
    auto b = right_->leaves();
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }

  /// Display form, e.g. [1], [[1,2]], [[1,[1,2]]].
  std::string to_string() const { return "[" + inner() + "]"; }

  friend bool operator==(const BracketWord& a, const BracketWord& b) {
    if (a.is_letter() || b.is_letter()) return a.leaf_ == b.leaf_;
    return a.left() == b.left() && a.right() == b.right();
  }

private:
  std::string inner() const {
    if (is_letter()) return std::to_string(leaf_);
    return "[" + left_->inner() + "," + right_->inner() + "]";
  }

  int leaf_ = -1;
  std::shared_ptr<const BracketWord> left_, right_;
};

/// Affine control system  x' = X_0(x) + sum_i u_i X_i(x)  on one chart of R^n.
class ControlSystem {
public:
  ControlSystem(std::string name, VectorField drift, std::vector<VectorField> controlled,
                std::vector<bool> periodic = {})
      : name_(std::move(name)), drift_(std::move(drift)), controlled_(std::move(controlled)),
        periodic_(std::move(periodic)) {
    if (controlled_.empty()) throw InvalidArgument("control rank d must be >= 1");
    n_ = controlled_.front().dim();
    if (n_ == 0) throw InvalidArgument("state dimension n must be >= 1");
    for (const auto& f : controlled_)
      if (f.dim() != n_) throw InvalidArgument("controlled field dimension mismatch");
    if (drift_.dim() == 0) drift_ = VectorField::zero(n_);
    if (drift_.dim() != n_) throw InvalidArgument("drift dimension mismatch");
    if (periodic_.empty()) periodic_.assign(n_, false);
    if (periodic_.size() != n_) throw InvalidArgument("periodic flags must have one entry per coordinate");
    symbolic_ = drift_.is_symbolic() &&
                std::all_of(controlled_.begin(), controlled_.end(), [](const auto& f) { return f.is_symbolic(); });
    trig_ = drift_.uses_trig() ||
            std::any_of(controlled_.begin(), controlled_.end(), [](const auto& f) { return f.uses_trig(); });
  }

  const std::string& name() const { return name_; }
  int n() const { return static_cast<int>(n_); }
  int d() const { return static_cast<int>(controlled_.size()); }
  bool driftless() const { return drift_.is_zero(); }
  bool symbolic() const { return symbolic_; }
  const std::vector<bool>& periodic() const { return periodic_; }
  const VectorField& drift() const { return drift_; }
  const std::vector<VectorField>& controlled() const { return controlled_; }

  /// Index 0 is the drift, 1..d the controlled fields.
  const VectorField& field(int index) const {
    if (index < 0 || index > d()) throw InvalidArgument("field index " + std::to_string(index) + " out of range");
    return index == 0 ? drift_ : controlled_[static_cast<std::size_t>(index - 1)];
  }

  /// Displacement y - x, with periodic coordinates wrapped to (-pi, pi].
  Vec displacement(const Vec& x, const Vec& y) const {
    Vec dx = y - x;
    for (std::size_t i = 0; i < n_; ++i)
      if (periodic_[i]) {
        double& v = dx[static_cast<Eigen::Index>(i)];
        v = std::remainder(v, 2.0 * std::numbers::pi);
      }
    return dx;
  }

  /// Right-hand side X_0(x) + sum u_i X_i(x) and, optionally, its state
  /// Jacobian A (n x n, column-major) and control matrix B (n x d, column-major).
  void evaluate(const double* x, const double* u, double* rhs, double* A = nullptr, double* B = nullptr) const {
    const int nn = n();
    if (symbolic_) {
      detail::PointBase base({x, n_}, trig_);
      drift_.value_into(base, rhs);
      if (A) drift_.jacobian_into(base, A);
      thread_local std::vector<double> tmp;
      tmp.resize(n_);
      for (int i = 0; i < d(); ++i) {
        const auto& f = controlled_[static_cast<std::size_t>(i)];
        double* col = B ? B + static_cast<std::size_t>(i) * n_ : tmp.data();
        f.value_into(base, col);
        for (int k = 0; k < nn; ++k) rhs[k] += u[i] * col[k];
        if (A && u[i] != 0.0) f.jacobian_into(base, A, u[i], true);
      }
      return;
    }
    Vec xv = Eigen::Map<const Vec>(x, nn);
    Eigen::Map<Vec> r(rhs, nn);
    r = drift_.value(xv);
    if (A) Eigen::Map<Mat>(A, nn, nn) = drift_.jacobian(xv);
    for (int i = 0; i < d(); ++i) {
      const auto& f = controlled_[static_cast<std::size_t>(i)];
      Vec col = f.value(xv);
      r += u[i] * col;
      if (B) Eigen::Map<Vec>(B + static_cast<std::size_t>(i) * n_, nn) = col;
      if (A && u[i] != 0.0) Eigen::Map<Mat>(A, nn, nn) += u[i] * f.jacobian(xv);
    }
  }

  /// Symbolic field of a bracket word.
  VectorField word_field(const BracketWord& w) const {
    if (w.is_letter()) return field(w.index());
    return lie_bracket(word_field(w.left()), word_field(w.right()));
  }

private:
  std::string name_;
  std::size_t n_ = 0;
  VectorField drift_;
  std::vector<VectorField> controlled_;
  std::vector<bool> periodic_;
  bool symbolic_ = true;
  bool trig_ = false;
};

inline Vec eval_field(const ControlSystem& system, int index, const Vec& point) {
  if (!point.allFinite()) throw InvalidArgument("eval_field: point not finite");
  return system.field(index).value(point);
}

/// Right-normed words in (length, lexicographic leaf order) up to max_depth.
/// Words ending in a repeated letter [.., [i, i]] vanish identically and are skipped.
inline std::vector<BracketWord> enumerate_words(int alphabet_lo, int alphabet_hi, int max_depth) {
  std::vector<BracketWord> out;
  std::vector<std::vector<int>> level;
  for (int i = alphabet_lo; i <= alphabet_hi; ++i) level.push_back({i});
  for (int len = 1; len <= max_depth; ++len) {
    for (const auto& leaves : level) {
      if (leaves.size() >= 2 && leaves[leaves.size() - 1] == leaves[leaves.size() - 2]) continue;
      out.push_back(BracketWord::right_normed(leaves));
    }
    if (len == max_depth) break;
    std::vector<std::vector<int>> next;
    for (const auto& leaves : level)
      for (int i = alphabet_lo; i <= alphabet_hi; ++i) {
        auto w = leaves;
        w.push_back(i);
        next.push_back(std::move(w));
      }
    std::sort(next.begin(), next.end());
    level = std::move(next);
  }
  return out;
}

struct BracketFrame {
  std::vector<BracketWord> words;
  std::vector<VectorField> fields;
  int step = 0;
  Mat matrix;  // columns are the word fields evaluated at the point
  Vec singular_values;
};

/// Greedy selection of n bracket words whose fields are independent at `point`.
/// Drift systems use the alphabet {0..d}; driftless systems {1..d}, unless
/// `controlled_only` forces the latter.
inline BracketFrame bracket_frame(const ControlSystem& system, const Vec& point, int max_depth,
                                  double rank_tol = 1e-8, bool controlled_only = false) {
  if (!system.symbolic()) throw Unsupported("bracket_frame requires symbolic fields");
  if (!point.allFinite()) throw InvalidArgument("bracket_frame: point not finite");
  const int n = system.n();
  const int lo = (system.driftless() || controlled_only) ? 1 : 0;
  BracketFrame frame;
  frame.matrix.resize(n, 0);
  std::map<std::vector<int>, VectorField> cache;
  auto field_of = [&](const std::vector<int>& leaves) -> VectorField {
    if (auto it = cache.find(leaves); it != cache.end()) return it->second;
    VectorField f = leaves.size() == 1
                        ? system.field(leaves[0])
                        : lie_bracket(system.field(leaves[0]), cache.at({leaves.begin() + 1, leaves.end()}));
    cache.emplace(leaves, f);
    return f;
  };
  int achieved = 0;
  for (const auto& word : enumerate_words(lo, system.d(), max_depth)) {
    const auto leaves = word.leaves();
    // inner suffixes first, shortest to longest
    for (std::size_t s = leaves.size(); s-- > 1;) {
      std::vector<int> suffix(leaves.begin() + static_cast<std::ptrdiff_t>(s), leaves.end());
      field_of(suffix);
    }
    VectorField f = field_of(leaves);
    if (f.is_zero()) continue;
    Vec col = f.value(point);
    Mat trial(n, frame.matrix.cols() + 1);
    trial << frame.matrix, col;
    Eigen::JacobiSVD<Mat> svd(trial);
    const Vec sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) continue;
    if (sv[sv.size() - 1] <= rank_tol * sv[0]) continue;
    frame.matrix = trial;
    frame.words.push_back(word);
    frame.fields.push_back(f);
    frame.step = std::max(frame.step, word.length());
    achieved = static_cast<int>(frame.words.size());
    if (achieved == n) break;
  }
  if (achieved < n) throw NotBracketGenerating(achieved, n);
  frame.singular_values = Eigen::JacobiSVD<Mat>(frame.matrix).singularValues();
  return frame;
}

namespace catalog_detail {

inline Polynomial x(std::size_t n, std::size_t i) { return Polynomial::variable(n, i); }
inline Polynomial c(std::size_t n, double v) { return Polynomial::constant(n, v); }
inline Polynomial zero(std::size_t n) { return Polynomial(n); }

inline std::pair<std::string, std::optional<int>> parse_name(const std::string& raw) {
  std::string s;
  for (char ch : raw)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  const auto open = s.find('(');
  if (open == std::string::npos) return {s, std::nullopt};
  if (s.back() != ')') throw UnknownSystem(raw);
  const std::string arg = s.substr(open + 1, s.size() - open - 2);
  try {
    std::size_t used = 0;
    const int k = std::stoi(arg, &used);
    if (used != arg.size()) throw UnknownSystem(raw);
    return {s.substr(0, open), k};
  } catch (const std::logic_error&) {
    throw UnknownSystem(raw);
  }
}

}  // namespace catalog_detail

inline std::vector<std::string> catalog_names() {
  return {"heisenberg", "martinet", "unicycle", "agrachev_lee(k)", "grushin", "free_step2_rank2", "trivial(n)"};
}

/// Built-in systems with exact symbolic fields.
inline ControlSystem catalog_load(const std::string& name) {
  using namespace catalog_detail;
  const auto [base, arg] = parse_name(name);
  if (base == "heisenberg" && !arg) {
    const std::size_t n = 3;
    VectorField x1({c(n, 1), zero(n), -0.5 * x(n, 1)});
    VectorField x2({zero(n), c(n, 1), 0.5 * x(n, 0)});
    return ControlSystem("heisenberg", VectorField::zero(n), {x1, x2});
  }
  if (base == "martinet" && !arg) {
    const std::size_t n = 3;
    VectorField x1({c(n, 1), zero(n), zero(n)});
    VectorField x2({zero(n), c(n, 1), x(n, 0) * x(n, 0)});
    return ControlSystem("martinet", VectorField::zero(n), {x1, x2});
  }
  if (base == "unicycle" && !arg) {
    const std::size_t n = 3;
    VectorField x1({Polynomial::cosine(n, 2), Polynomial::sine(n, 2), zero(n)});
    VectorField x2({zero(n), zero(n), c(n, 1)});
    return ControlSystem("unicycle", VectorField::zero(n), {x1, x2}, {false, false, true});
  }
  if (base == "agrachev_lee") {
    const int k = arg.value_or(3);
    if (k < 3) throw UnknownSystem(name + " (requires k >= 3)");
    const std::size_t n = 2;
    Polynomial xk = c(n, 1);
    for (int i = 0; i < k; ++i) xk = xk * x(n, 0);
    VectorField x0({zero(n), x(n, 0) * x(n, 0)});
    VectorField x1({c(n, 1), zero(n)});
    VectorField x2({zero(n), xk});
    return ControlSystem("agrachev_lee(" + std::to_string(k) + ")", x0, {x1, x2});
  }
  if (base == "grushin" && !arg) {
    const std::size_t n = 2;
    VectorField x1({c(n, 1), zero(n)});
    VectorField x2({zero(n), x(n, 0)});
    return ControlSystem("grushin", VectorField::zero(n), {x1, x2});
  }
  if (base == "free_step2_rank2" && !arg) {
    const std::size_t n = 3;
    VectorField x1({c(n, 1), zero(n), zero(n)});
    VectorField x2({zero(n), c(n, 1), x(n, 0)});
    return ControlSystem("free_step2_rank2", VectorField::zero(n), {x1, x2});
  }
  if (base == "trivial") {
    const int dim = arg.value_or(2);
    if (dim < 1) throw UnknownSystem(name);
    const auto n = static_cast<std::size_t>(dim);
    std::vector<VectorField> fields;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Polynomial> comp(n, zero(n));
      comp[i] = c(n, 1);
      fields.emplace_back(std::move(comp));
    }
    return ControlSystem("trivial(" + std::to_string(dim) + ")", VectorField::zero(n), std::move(fields));
  }
  throw UnknownSystem(name);
}

}  // namespace horizon
