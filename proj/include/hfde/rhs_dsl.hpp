#pragma once

// Expression language for the right-hand side f(t, u, u(b_1(t)), ..., u(b_r(t)))
// and the delay maps b_j(t).
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | 't' | 'u[' i ']' | 'd[' j '][' i ']'
//            | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | exp | sqrt | abs
//
// u[i] is state component i (0-based), d[j][i] component i of u(b_j(t))
// (j is 1-based).

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hfde/errors.hpp"

namespace hfde {

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

enum class NodeKind { number, time, state, delayed, neg, add, sub, mul, div, pow, call };
enum class Func { sin, cos, exp, sqrt, abs };

struct Node {
  NodeKind kind = NodeKind::number;
  double value = 0.0;  // number
  int index = 0;       // state / delayed component
  int delay = 0;       // delayed: 1-based map number
  Func func = Func::sin;
  std::shared_ptr<const Node> lhs;  // operand of neg / call, left of binary
  std::shared_ptr<const Node> rhs;
  std::size_t offset = 0;
};

/// Immutable syntax tree.
class Expr {
 public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

  const Node& root() const { return *root_; }
  bool empty() const { return !root_; }

  static Expr number(double v);
  static Expr time();
  static Expr state(int i);
  static Expr delayed(int j, int i);
  static Expr negate(const Expr& e);
  static Expr binary(NodeKind op, const Expr& a, const Expr& b);
  static Expr call(Func f, const Expr& e);

 private:
  std::shared_ptr<const Node> root_;
};

/// What identifiers an expression may use.
struct ExprScope {
  int n = 1;               // state dimension
  int r = 0;               // number of delay maps
  bool time_only = false;  // delay maps see only t
};

Expr parse(std::string_view src, const ExprScope& scope);
inline Expr parse(std::string_view src, int n, int r) { return parse(src, ExprScope{n, r, false}); }

/// delayed holds u(b_j(t)) in row j-1.
double eval(const Expr& e, double t, const Eigen::VectorXd& u, const Eigen::MatrixXd& delayed);
double eval_time(const Expr& e, double t);

/// Fully parenthesised text that parses back to the same tree.
std::string print(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

/// Parsed right-hand side: n component expressions and r delay maps.
struct RhsSpec {
  int n = 1;
  int r = 0;
  std::vector<std::string> f_src;
  std::vector<std::string> b_src;
  std::vector<Expr> f;
  std::vector<Expr> b;

  /// Parses f_src (n entries) and b_src (r entries).
  static RhsSpec from_strings(std::vector<std::string> f_src, std::vector<std::string> b_src);

  Eigen::VectorXd evaluate(double t, const Eigen::VectorXd& u, const Eigen::MatrixXd& delayed) const;
  double delay(int j, double t) const;  // b_j(t), j 1-based
  /// True when no component reads the state (u or d).
  bool state_independent() const;
};

/// Sampling region for the Lipschitz estimate; every argument z_0 = u and
/// z_j = u(b_j) ranges over the same box.
struct LipschitzBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  double t_lo = 0.0;
  double t_hi = 1.0;
};

struct LipschitzEstimate {
  double value = 0.0;
  int pairs = 0;  // successfully evaluated pairs
  bool heuristic = true;
};

/// max ||f(s,z) - f(s,zbar)|| / sum_i ||z_i - zbar_i|| over random pairs.
/// A lower bound on the Lipschitz constant, never a certificate.
LipschitzEstimate estimate_lipschitz(const RhsSpec& spec, const LipschitzBox& box, int samples,
                                     std::uint64_t seed = 0x5eed);

struct DelayViolation {
  int map = 0;  // 1-based
  double t = 0.0;
  double value = 0.0;  // b_j(t), NaN when evaluation failed
};

/// Nodes where b_j(t) leaves [t0, t0 + a].
std::vector<DelayViolation> check_delay_range(const RhsSpec& spec, double t0, double a,
                                              const std::vector<double>& nodes);

}  // namespace hfde
