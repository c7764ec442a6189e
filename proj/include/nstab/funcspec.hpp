#pragma once

// Scalar functions of time: a tiny expression language over the single
// variable t, used for coefficients, lags, forcing terms and histories.
//
//   expr    := term { ('+' | '-') term }
//   term    := unary { ('*' | '/') unary }
//   unary   := ('+' | '-') unary | primary
//   primary := number | 't' | 'pi' | name | call | '(' expr ')'
//   call    := ('sin' | 'cos' | 'exp' | 'abs') '(' expr ')'
//            | ('min' | 'max') '(' expr ',' expr ')'
//
// `name` must be supplied through a Bindings map at parse time; it is
// substituted by its numeric value.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <fmt/format.h>

#include "nstab/error.hpp"

namespace nstab {

using Bindings = std::map<std::string, double, std::less<>>;

enum class Op { constant, time, neg, add, sub, mul, div, sin, cos, exp, abs, min, max };

/// Immutable expression tree node.
struct ExprNode {
  Op op = Op::constant;
  double value = 0.0;
  std::shared_ptr<const ExprNode> lhs;
  std::shared_ptr<const ExprNode> rhs;
};

using NodePtr = std::shared_ptr<const ExprNode>;

namespace detail {

inline NodePtr make_node(Op op, double value = 0.0, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  return std::make_shared<const ExprNode>(ExprNode{op, value, std::move(lhs), std::move(rhs)});
}

inline double eval_node(const ExprNode& n, double t) {
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::time: return t;
    case Op::neg: return -eval_node(*n.lhs, t);
    case Op::add: return eval_node(*n.lhs, t) + eval_node(*n.rhs, t);
    case Op::sub: return eval_node(*n.lhs, t) - eval_node(*n.rhs, t);
    case Op::mul: return eval_node(*n.lhs, t) * eval_node(*n.rhs, t);
    case Op::div: {
      const double den = eval_node(*n.rhs, t);
      if (den == 0.0) throw EvalError("division by zero", t);
      return eval_node(*n.lhs, t) / den;
    }
    case Op::sin: return std::sin(eval_node(*n.lhs, t));
    case Op::cos: return std::cos(eval_node(*n.lhs, t));
    case Op::exp: return std::exp(eval_node(*n.lhs, t));
    case Op::abs: return std::abs(eval_node(*n.lhs, t));
    case Op::min: return std::min(eval_node(*n.lhs, t), eval_node(*n.rhs, t));
    case Op::max: return std::max(eval_node(*n.lhs, t), eval_node(*n.rhs, t));
  }
  return 0.0;
}

inline void print_node(const ExprNode& n, std::string& out) {
  auto binary = [&](char sym) {
    out += '(';
    print_node(*n.lhs, out);
    out += sym;
    print_node(*n.rhs, out);
    out += ')';
  };
  auto call = [&](std::string_view name) {
    out += name;
    out += '(';
    print_node(*n.lhs, out);
    if (n.rhs) {
      out += ',';
      print_node(*n.rhs, out);
    }
    out += ')';
  };
  switch (n.op) {
    case Op::constant:
      // shortest round-trip representation
      if (std::signbit(n.value))
        out += fmt::format("(-{})", -n.value);
      else
        out += fmt::format("{}", n.value);
      break;
    case Op::time: out += 't'; break;
    case Op::neg:
      out += "(-";
      print_node(*n.lhs, out);
      out += ')';
      break;
    case Op::add: binary('+'); break;
    case Op::sub: binary('-'); break;
    case Op::mul: binary('*'); break;
    case Op::div: binary('/'); break;
    case Op::sin: call("sin"); break;
    case Op::cos: call("cos"); break;
    case Op::exp: call("exp"); break;
    case Op::abs: call("abs"); break;
    case Op::min: call("min"); break;
    case Op::max: call("max"); break;
  }
}

class Parser {
 public:
  Parser(std::string_view text, const Bindings& bindings) : text_(text), bindings_(bindings) {}

  NodePtr parse() {
    NodePtr root = expr();
    skip_space();
    if (pos_ != text_.size()) throw ParseError(fmt::format("unexpected '{}'", text_[pos_]), pos_);
    return root;
  }

 private:
  std::string_view text_;
  const Bindings& bindings_;
  std::size_t pos_ = 0;

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) throw ParseError(fmt::format("expected '{}' but input ended", c), pos_);
      throw ParseError(fmt::format("expected '{}' but found '{}'", c, text_[pos_]), pos_);
    }
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = make_node(Op::add, 0.0, lhs, term());
      else if (accept('-'))
        lhs = make_node(Op::sub, 0.0, lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = make_node(Op::mul, 0.0, lhs, unary());
      else if (accept('/'))
        lhs = make_node(Op::div, 0.0, lhs, unary());
      else
        return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make_node(Op::neg, 0.0, unary());
    if (accept('+')) return unary();
    return primary();
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError(fmt::format("unexpected '{}'", c), pos_);
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    const char* first = text_.data() + start;
    const char* last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
      throw ParseError(fmt::format("malformed number '{}'", std::string_view(first, last - first)), start);
    return make_node(Op::constant, value);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);

    static constexpr std::pair<std::string_view, Op> unary_fns[] = {
        {"sin", Op::sin}, {"cos", Op::cos}, {"exp", Op::exp}, {"abs", Op::abs}};
    static constexpr std::pair<std::string_view, Op> binary_fns[] = {{"min", Op::min}, {"max", Op::max}};

    for (const auto& [fn, op] : unary_fns) {
      if (name == fn) {
        expect('(');
        NodePtr arg = expr();
        expect(')');
        return make_node(op, 0.0, arg);
      }
    }
    for (const auto& [fn, op] : binary_fns) {
      if (name == fn) {
        expect('(');
        NodePtr lhs = expr();
        expect(',');
        NodePtr rhs = expr();
        expect(')');
        return make_node(op, 0.0, lhs, rhs);
      }
    }
    if (name == "t") return make_node(Op::time);
    if (name == "pi") return make_node(Op::constant, std::numbers::pi);
    if (auto it = bindings_.find(name); it != bindings_.end()) return make_node(Op::constant, it->second);
    throw ParseError(fmt::format("unknown identifier '{}'", name), start);
  }
};

}  // namespace detail

/// A parsed scalar function of time. Cheap to copy; the tree is shared and immutable.
class FuncExpr {
 public:
  FuncExpr() : root_(detail::make_node(Op::constant, 0.0)), source_("0") {}

  FuncExpr(NodePtr root, std::string source) : root_(std::move(root)), source_(std::move(source)) {}

  static FuncExpr constant(double c) {
    FuncExpr e(detail::make_node(Op::constant, c), {});
    e.source_ = e.print();
    return e;
  }

  static FuncExpr time() { return FuncExpr(detail::make_node(Op::time), "t"); }

  double operator()(double t) const { return detail::eval_node(*root_, t); }

  const ExprNode& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }
  const std::string& source() const { return source_; }

  /// Fully parenthesized text that parses back to an equivalent tree.
  std::string print() const {
    std::string out;
    detail::print_node(*root_, out);
    return out;
  }

  bool is_constant() const;

  friend FuncExpr operator*(const FuncExpr& l, const FuncExpr& r) { return combine(Op::mul, l, r); }
  friend FuncExpr operator+(const FuncExpr& l, const FuncExpr& r) { return combine(Op::add, l, r); }
  friend FuncExpr operator-(const FuncExpr& l, const FuncExpr& r) { return combine(Op::sub, l, r); }

 private:
  NodePtr root_;
  std::string source_;

  static FuncExpr combine(Op op, const FuncExpr& l, const FuncExpr& r) {
    FuncExpr e(detail::make_node(op, 0.0, l.root_, r.root_), {});
    e.source_ = e.print();
    return e;
  }
};

inline FuncExpr parse(std::string_view text, const Bindings& bindings = {}) {
  detail::Parser parser(text, bindings);
  return FuncExpr(parser.parse(), std::string(text));
}

inline double eval(const FuncExpr& f, double t) { return f(t); }

/// mean + amplitude * sin(omega * t + phase), with amplitude >= 0 and omega >= 0.
struct Harmonic {
  double mean = 0.0;
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;

  bool is_constant() const { return amplitude == 0.0; }
  double lo() const { return mean - amplitude; }
  double hi() const { return mean + amplitude; }
};

namespace detail {

// c0 + slope * t + amp * sin(omega * t + phase); slope and amp never both nonzero.
struct Shape {
  double c0 = 0.0;
  double slope = 0.0;
  double amp = 0.0;
  double omega = 0.0;
  double phase = 0.0;

  bool is_const() const { return slope == 0.0 && amp == 0.0; }
};

inline Shape scaled(Shape s, double k) {
  s.c0 *= k;
  s.slope *= k;
  s.amp *= k;
  if (s.amp == 0.0) s.omega = s.phase = 0.0;
  return s;
}

inline std::optional<Shape> sum_shapes(const Shape& x, const Shape& y) {
  Shape out;
  out.c0 = x.c0 + y.c0;
  out.slope = x.slope + y.slope;
  if (x.amp == 0.0) {
    out.amp = y.amp, out.omega = y.omega, out.phase = y.phase;
  } else if (y.amp == 0.0) {
    out.amp = x.amp, out.omega = x.omega, out.phase = x.phase;
  } else if (x.omega == y.omega) {
    // phasor addition at a common frequency
    const double re = x.amp * std::cos(x.phase) + y.amp * std::cos(y.phase);
    const double im = x.amp * std::sin(x.phase) + y.amp * std::sin(y.phase);
    out.amp = std::hypot(re, im);
    out.omega = x.omega;
    out.phase = out.amp == 0.0 ? 0.0 : std::atan2(im, re);
  } else {
    return std::nullopt;
  }
  if (out.amp == 0.0) out.omega = out.phase = 0.0;
  if (out.slope != 0.0 && out.amp != 0.0) return std::nullopt;
  return out;
}

inline std::optional<Shape> sinusoid_of(const Shape& arg, double phase_shift) {
  if (arg.amp != 0.0) return std::nullopt;
  if (arg.slope == 0.0) return Shape{std::sin(arg.c0 + phase_shift)};
  return Shape{0.0, 0.0, 1.0, arg.slope, arg.c0 + phase_shift};
}

inline std::optional<Shape> recognize(const ExprNode& n) {
  switch (n.op) {
    case Op::constant: return Shape{n.value};
    case Op::time: return Shape{0.0, 1.0};
    case Op::neg: {
      auto s = recognize(*n.lhs);
      if (!s) return std::nullopt;
      return scaled(*s, -1.0);
    }
    case Op::add:
    case Op::sub: {
      auto l = recognize(*n.lhs);
      auto r = recognize(*n.rhs);
      if (!l || !r) return std::nullopt;
      return sum_shapes(*l, n.op == Op::add ? *r : scaled(*r, -1.0));
    }
    case Op::mul: {
      auto l = recognize(*n.lhs);
      auto r = recognize(*n.rhs);
      if (!l || !r) return std::nullopt;
      if (l->is_const()) return scaled(*r, l->c0);
      if (r->is_const()) return scaled(*l, r->c0);
      return std::nullopt;
    }
    case Op::div: {
      auto l = recognize(*n.lhs);
      auto r = recognize(*n.rhs);
      if (!l || !r || !r->is_const() || r->c0 == 0.0) return std::nullopt;
      return scaled(*l, 1.0 / r->c0);
    }
    case Op::sin:
    case Op::cos: {
      auto arg = recognize(*n.lhs);
      if (!arg) return std::nullopt;
      return sinusoid_of(*arg, n.op == Op::cos ? std::numbers::pi / 2 : 0.0);
    }
    case Op::exp:
    case Op::abs: {
      auto arg = recognize(*n.lhs);
      if (!arg || !arg->is_const()) return std::nullopt;
      return Shape{n.op == Op::exp ? std::exp(arg->c0) : std::abs(arg->c0)};
    }
    case Op::min:
    case Op::max: {
      auto l = recognize(*n.lhs);
      auto r = recognize(*n.rhs);
      if (!l || !r || !l->is_const() || !r->is_const()) return std::nullopt;
      return Shape{n.op == Op::min ? std::min(l->c0, r->c0) : std::max(l->c0, r->c0)};
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Recognizes constants and c0 + c1*sin(w*t + phi) (cos included) by algebraic
/// normalization of the tree. Returns nullopt for anything else, including
/// unbounded affine terms in t.
inline std::optional<Harmonic> recognize_harmonic(const FuncExpr& f) {
  auto s = detail::recognize(f.root());
  if (!s || s->slope != 0.0) return std::nullopt;
  Harmonic h{s->c0, s->amp, s->omega, s->phase};
  if (h.omega < 0.0) {
    h.omega = -h.omega;
    h.phase = -h.phase;
    h.amplitude = -h.amplitude;
  }
  if (h.amplitude < 0.0) {
    h.amplitude = -h.amplitude;
    h.phase += std::numbers::pi;
  }
  if (h.amplitude == 0.0) h.omega = h.phase = 0.0;
  return h;
}

inline bool FuncExpr::is_constant() const {
  auto h = recognize_harmonic(*this);
  return h && h->is_constant();
}

/// Closed interval of time.
struct Horizon {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
};

/// Range of a function over a horizon; `exact` when obtained in closed form.
struct FunctionRange {
  double lo = 0.0;
  double hi = 0.0;
  bool exact = false;
};

/// Raw min/max over `n` uniformly spaced samples including both ends.
inline FunctionRange sampled_range(const FuncExpr& f, Horizon horizon, std::size_t n) {
  if (n < 2) n = 2;
  FunctionRange r{HUGE_VAL, -HUGE_VAL, false};
  const double step = horizon.length() / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = f(horizon.lo + step * static_cast<double>(i));
    r.lo = std::min(r.lo, v);
    r.hi = std::max(r.hi, v);
  }
  return r;
}

/// Closed form when the function is a recognized harmonic, otherwise sampled.
inline FunctionRange function_range(const FuncExpr& f, Horizon horizon, std::size_t n,
                                    bool force_sampling = false) {
  if (!force_sampling) {
    if (auto h = recognize_harmonic(f)) return {h->lo(), h->hi(), true};
  }
  return sampled_range(f, horizon, n);
}

/// Widens a sampled range outward (x1.001 on maxima, x0.999 on positive minima).
/// Exact ranges pass through unchanged.
inline constexpr double kSampleInflation = 1.001;
inline constexpr double kSampleDeflation = 0.999;

inline FunctionRange conservative(FunctionRange r) {
  if (r.exact) return r;
  r.hi = r.hi >= 0.0 ? r.hi * kSampleInflation : r.hi * kSampleDeflation;
  r.lo = r.lo >= 0.0 ? r.lo * kSampleDeflation : r.lo * kSampleInflation;
  return r;
}

/// A delay given by its lag d(t) = t - g(t). Declared bounds are optional and,
/// when present, are validated against the lag rather than trusted.
struct DelayFunc {
  FuncExpr lag;
  std::optional<double> declared_max;
  std::optional<double> declared_min;

  static DelayFunc constant(double c) { return {FuncExpr::constant(c), c, c}; }
  static DelayFunc none() { return constant(0.0); }

  /// The delayed argument g(t) = t - lag(t).
  double operator()(double t) const { return t - lag(t); }
};

}  // namespace nstab
