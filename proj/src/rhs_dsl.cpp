#include "hfde/rhs_dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>

namespace hfde {

namespace {

std::shared_ptr<Node> make(NodeKind k, std::size_t offset = 0) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->offset = offset;
  return n;
}

const char* func_name(Func f) {
  switch (f) {
    case Func::sin: return "sin";
    case Func::cos: return "cos";
    case Func::exp: return "exp";
    case Func::sqrt: return "sqrt";
    case Func::abs: return "abs";
  }
  return "?";
}

char op_char(NodeKind k) {
  switch (k) {
    case NodeKind::add: return '+';
    case NodeKind::sub: return '-';
    case NodeKind::mul: return '*';
    case NodeKind::div: return '/';
    case NodeKind::pow: return '^';
    default: return '?';
  }
}

class Parser {
 public:
  Parser(std::string_view src, const ExprScope& scope) : src_(src), scope_(scope) {}

  Expr run() {
    skip();
    if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
    auto root = expr();
    skip();
    if (pos_ < src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return Expr(std::move(root));
  }

 private:
  using Ptr = std::shared_ptr<const Node>;

  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < src_.size() && src_[pos_] == c;
  }
  void expect(char c) {
    if (!peek(c)) {
      if (pos_ >= src_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
    ++pos_;
  }

  Ptr binary(NodeKind k, Ptr a, Ptr b, std::size_t at) {
    auto n = make(k, at);
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
  }

  Ptr expr() {
    Ptr left = term();
    for (;;) {
      if (peek('+') || peek('-')) {
        const std::size_t at = pos_;
        const NodeKind k = src_[pos_++] == '+' ? NodeKind::add : NodeKind::sub;
        left = binary(k, left, term(), at);
      } else {
        return left;
      }
    }
  }

  Ptr term() {
    Ptr left = unary();
    for (;;) {
      if (peek('*') || peek('/')) {
        const std::size_t at = pos_;
        const NodeKind k = src_[pos_++] == '*' ? NodeKind::mul : NodeKind::div;
        left = binary(k, left, unary(), at);
      } else {
        return left;
      }
    }
  }

  Ptr unary() {
    if (peek('-')) {
      auto n = make(NodeKind::neg, pos_++);
      n->lhs = unary();
      return n;
    }
    return power();
  }

  Ptr power() {
    Ptr base = primary();
    if (peek('^')) {
      const std::size_t at = pos_++;
      return binary(NodeKind::pow, base, unary(), at);
    }
    return base;
  }

  int index_literal() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ == start) throw ParseError("expected an integer index", start);
    int v = 0;
    const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (res.ec != std::errc()) throw ParseError("index too large", start);
    return v;
  }

  Ptr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
      if (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) {
        pos_ = q;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != src_.data() + pos_) throw ParseError("malformed number", start);
    auto n = make(NodeKind::number, start);
    n->value = v;
    return n;
  }

  Ptr primary() {
    skip();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    const std::size_t start = pos_;
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      Ptr inner = expr();
      expect(')');
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
      const std::string_view id = src_.substr(start, pos_ - start);
      if (id == "t") return make(NodeKind::time, start);
      if (id == "u") {
        if (scope_.time_only) throw ParseError("delay maps may only reference t", start);
        expect('[');
        const int i = index_literal();
        expect(']');
        if (i >= scope_.n) throw ParseError("index out of range: u[" + std::to_string(i) + "]", start);
        auto n = make(NodeKind::state, start);
        n->index = i;
        return n;
      }
      if (id == "d") {
        if (scope_.time_only) throw ParseError("delay maps may only reference t", start);
        expect('[');
        const int j = index_literal();
        expect(']');
        expect('[');
        const int i = index_literal();
        expect(']');
        if (j < 1 || j > scope_.r || i >= scope_.n)
          throw ParseError("index out of range: d[" + std::to_string(j) + "][" + std::to_string(i) + "]", start);
        auto n = make(NodeKind::delayed, start);
        n->delay = j;
        n->index = i;
        return n;
      }
      for (Func f : {Func::sin, Func::cos, Func::exp, Func::sqrt, Func::abs}) {
        if (id == func_name(f)) {
          expect('(');
          auto n = make(NodeKind::call, start);
          n->func = f;
          n->lhs = expr();
          expect(')');
          return n;
        }
      }
      throw ParseError("unknown identifier '" + std::string(id) + "'", start);
    }
    throw ParseError(std::string("unexpected '") + c + "'", start);
  }

  std::string_view src_;
  ExprScope scope_;
  std::size_t pos_ = 0;
};

void print_to(const Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::number: {
      char buf[64];
      const auto res = std::to_chars(buf, buf + sizeof buf, n.value);
      if (n.value < 0.0) {
        out += "(";
        out.append(buf, res.ptr);
        out += ")";
      } else {
        out.append(buf, res.ptr);
      }
      return;
    }
    case NodeKind::time: out += "t"; return;
    case NodeKind::state: out += "u[" + std::to_string(n.index) + "]"; return;
    case NodeKind::delayed: out += "d[" + std::to_string(n.delay) + "][" + std::to_string(n.index) + "]"; return;
    case NodeKind::neg:
      out += "(-";
      print_to(*n.lhs, out);
      out += ")";
      return;
    case NodeKind::call:
      out += func_name(n.func);
      out += "(";
      print_to(*n.lhs, out);
      out += ")";
      return;
    default:
      out += "(";
      print_to(*n.lhs, out);
      out += op_char(n.kind);
      print_to(*n.rhs, out);
      out += ")";
      return;
  }
}

[[noreturn]] void fail(const Node& n, const std::string& why) {
  Expr sub(std::shared_ptr<const Node>(std::shared_ptr<const Node>(), &n));
  throw EvalError(why + " in '" + print(sub) + "' at offset " + std::to_string(n.offset));
}

struct EvalContext {
  double t;
  const Eigen::VectorXd* u;
  const Eigen::MatrixXd* delayed;
};

double eval_node(const Node& n, const EvalContext& c) {
  double v = 0.0;
  switch (n.kind) {
    case NodeKind::number: return n.value;
    case NodeKind::time: return c.t;
    case NodeKind::state:
      if (!c.u || n.index >= c.u->size()) fail(n, "state vector too short");
      return (*c.u)(n.index);
    case NodeKind::delayed:
      if (!c.delayed || n.delay > c.delayed->rows() || n.index >= c.delayed->cols())
        fail(n, "delayed state missing");
      return (*c.delayed)(n.delay - 1, n.index);
    case NodeKind::neg: return -eval_node(*n.lhs, c);
    case NodeKind::call: {
      const double x = eval_node(*n.lhs, c);
      switch (n.func) {
        case Func::sin: v = std::sin(x); break;
        case Func::cos: v = std::cos(x); break;
        case Func::exp: v = std::exp(x); break;
        case Func::sqrt:
          if (x < 0.0) fail(n, "sqrt of negative value");
          v = std::sqrt(x);
          break;
        case Func::abs: v = std::fabs(x); break;
      }
      break;
    }
    case NodeKind::add: v = eval_node(*n.lhs, c) + eval_node(*n.rhs, c); break;
    case NodeKind::sub: v = eval_node(*n.lhs, c) - eval_node(*n.rhs, c); break;
    case NodeKind::mul: v = eval_node(*n.lhs, c) * eval_node(*n.rhs, c); break;
    case NodeKind::div: {
      const double a = eval_node(*n.lhs, c);
      const double b = eval_node(*n.rhs, c);
      if (b == 0.0) fail(n, "division by zero");
      v = a / b;
      break;
    }
    case NodeKind::pow: {
      const double a = eval_node(*n.lhs, c);
      const double b = eval_node(*n.rhs, c);
      if (a < 0.0 && b != std::trunc(b)) fail(n, "negative base with non-integer exponent");
      if (a == 0.0 && b < 0.0) fail(n, "zero to a negative power");
      v = std::pow(a, b);
      break;
    }
  }
  if (!std::isfinite(v)) fail(n, "non-finite result");
  return v;
}

bool equal_nodes(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::number: return a.value == b.value;
    case NodeKind::time: return true;
    case NodeKind::state: return a.index == b.index;
    case NodeKind::delayed: return a.index == b.index && a.delay == b.delay;
    case NodeKind::neg: return equal_nodes(*a.lhs, *b.lhs);
    case NodeKind::call: return a.func == b.func && equal_nodes(*a.lhs, *b.lhs);
    default: return equal_nodes(*a.lhs, *b.lhs) && equal_nodes(*a.rhs, *b.rhs);
  }
}

bool reads_state(const Node& n) {
  switch (n.kind) {
    case NodeKind::state:
    case NodeKind::delayed: return true;
    case NodeKind::number:
    case NodeKind::time: return false;
    case NodeKind::neg:
    case NodeKind::call: return reads_state(*n.lhs);
    default: return reads_state(*n.lhs) || reads_state(*n.rhs);
  }
}

}  // namespace

Expr Expr::number(double v) {
  auto n = make(NodeKind::number);
  n->value = v;
  return Expr(n);
}
Expr Expr::time() { return Expr(make(NodeKind::time)); }
Expr Expr::state(int i) {
  auto n = make(NodeKind::state);
  n->index = i;
  return Expr(n);
}
Expr Expr::delayed(int j, int i) {
  auto n = make(NodeKind::delayed);
  n->delay = j;
  n->index = i;
  return Expr(n);
}
Expr Expr::negate(const Expr& e) {
  auto n = make(NodeKind::neg);
  n->lhs = e.root_;
  return Expr(n);
}
Expr Expr::binary(NodeKind op, const Expr& a, const Expr& b) {
  if (op != NodeKind::add && op != NodeKind::sub && op != NodeKind::mul && op != NodeKind::div &&
      op != NodeKind::pow)
    throw DomainError("Expr::binary: not a binary operator");
  auto n = make(op);
  n->lhs = a.root_;
  n->rhs = b.root_;
  return Expr(n);
}
Expr Expr::call(Func f, const Expr& e) {
  auto n = make(NodeKind::call);
  n->func = f;
  n->lhs = e.root_;
  return Expr(n);
}

Expr parse(std::string_view src, const ExprScope& scope) {
  if (scope.n < 1 || scope.r < 0) throw DomainError("parse: invalid scope");
  return Parser(src, scope).run();
}

double eval(const Expr& e, double t, const Eigen::VectorXd& u, const Eigen::MatrixXd& delayed) {
  if (e.empty()) throw EvalError("empty expression");
  return eval_node(e.root(), EvalContext{t, &u, &delayed});
}

double eval_time(const Expr& e, double t) {
  if (e.empty()) throw EvalError("empty expression");
  return eval_node(e.root(), EvalContext{t, nullptr, nullptr});
}

std::string print(const Expr& e) {
  std::string out;
  if (!e.empty()) print_to(e.root(), out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.empty() || b.empty()) return a.empty() == b.empty();
  return equal_nodes(a.root(), b.root());
}

RhsSpec RhsSpec::from_strings(std::vector<std::string> f_src, std::vector<std::string> b_src) {
  RhsSpec s;
  s.n = static_cast<int>(f_src.size());
  s.r = static_cast<int>(b_src.size());
  if (s.n < 1) throw DomainError("rhs: need at least one component expression");
  for (const auto& src : f_src) s.f.push_back(parse(src, ExprScope{s.n, s.r, false}));
  for (const auto& src : b_src) s.b.push_back(parse(src, ExprScope{s.n, s.r, true}));
  s.f_src = std::move(f_src);
  s.b_src = std::move(b_src);
  return s;
}

Eigen::VectorXd RhsSpec::evaluate(double t, const Eigen::VectorXd& u, const Eigen::MatrixXd& delayed) const {
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out(i) = eval(f[i], t, u, delayed);
  return out;
}

double RhsSpec::delay(int j, double t) const {
  if (j < 1 || j > r) throw DomainError("rhs: delay map index out of range");
  return eval_time(b[j - 1], t);
}

bool RhsSpec::state_independent() const {
  return std::none_of(f.begin(), f.end(), [](const Expr& e) { return reads_state(e.root()); });
}

LipschitzEstimate estimate_lipschitz(const RhsSpec& spec, const LipschitzBox& box, int samples,
                                     std::uint64_t seed) {
  if (samples < 100) throw DomainError("estimate_lipschitz: need at least 100 samples");
  if (box.lo.size() != spec.n || box.hi.size() != spec.n) throw DomainError("estimate_lipschitz: box dimension");
  for (int i = 0; i < spec.n; ++i)
    if (!(box.hi(i) > box.lo(i)) || !std::isfinite(box.lo(i)) || !std::isfinite(box.hi(i)))
      throw DomainError("estimate_lipschitz: degenerate or infinite box");
  if (!(box.t_hi >= box.t_lo)) throw DomainError("estimate_lipschitz: empty time range");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int args = spec.r + 1;
  auto draw = [&](Eigen::MatrixXd& z) {
    for (int a = 0; a < args; ++a)
      for (int i = 0; i < spec.n; ++i) z(a, i) = box.lo(i) + (box.hi(i) - box.lo(i)) * unit(rng);
  };

  LipschitzEstimate out;
  Eigen::MatrixXd z(args, spec.n), zb(args, spec.n);
  for (int s = 0; s < samples; ++s) {
    const double t = box.t_lo + (box.t_hi - box.t_lo) * unit(rng);
    draw(z);
    if (s % 2 == 0) {
      draw(zb);
    } else {
      // nearby pair: probes the local derivative
      zb = z;
      for (int a = 0; a < args; ++a)
        for (int i = 0; i < spec.n; ++i) {
          const double w = 1e-4 * (box.hi(i) - box.lo(i));
          zb(a, i) = std::clamp(z(a, i) + w * (2.0 * unit(rng) - 1.0), box.lo(i), box.hi(i));
        }
    }
    double denom = 0.0;
    for (int a = 0; a < args; ++a) denom += (z.row(a) - zb.row(a)).norm();
    if (!(denom > 0.0)) continue;
    try {
      const Eigen::VectorXd u = z.row(0).transpose();
      const Eigen::VectorXd ub = zb.row(0).transpose();
      const Eigen::MatrixXd d = z.bottomRows(spec.r);
      const Eigen::MatrixXd db = zb.bottomRows(spec.r);
      const double num = (spec.evaluate(t, u, d) - spec.evaluate(t, ub, db)).norm();
      out.value = std::max(out.value, num / denom);
      ++out.pairs;
    } catch (const EvalError&) {
    }
  }
  if (out.pairs == 0) throw EvalError("estimate_lipschitz: f could not be evaluated anywhere in the box");
  return out;
}

std::vector<DelayViolation> check_delay_range(const RhsSpec& spec, double t0, double a,
                                              const std::vector<double>& nodes) {
  std::vector<DelayViolation> out;
  const double lo = t0;
  const double hi = t0 + a;
  for (int j = 1; j <= spec.r; ++j) {
    for (double t : nodes) {
      double v = std::numeric_limits<double>::quiet_NaN();
      try {
        v = spec.delay(j, t);
      } catch (const EvalError&) {
      }
      if (!(v >= lo && v <= hi)) out.push_back({j, t, v});
    }
  }
  return out;
}

}  // namespace hfde
