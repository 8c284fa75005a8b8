#pragma once

// Prefix (s-expression) text form of representing functions.
//
//   fn   := "(" "fn" DIM expr+ ")"
//   expr := "(" "x" INDEX ")"
//         | "(" "c" COMPLEX ")"
//         | "(" ("add" | "sub" | "mul" | "div") expr expr ")"
//         | "(" ("neg" | "exp" | "log") expr ")"
//         | "(" "pow" COMPLEX expr ")"
//         | "(" "ind" ("eq" | "ne" | "le" | "gt") REAL expr ")"
//         | "(" "compose" fn expr ")"      -- expr reads the outputs of fn as (x i)
//
// COMPLEX is written without spaces: 2, -0.5, 1.5i, 0.5+1.2i.
// "le"/"gt" compare the modulus with the threshold.

#include <cctype>
#include <string>
#include <string_view>

#include "repcalc/repfn.hpp"

namespace repcalc {

namespace detail {

inline const char* op_keyword(Op op) {
  switch (op) {
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    default: return "?";
  }
}

inline const char* predicate_keyword(Predicate::Kind k) {
  switch (k) {
    case Predicate::Kind::Equal: return "eq";
    case Predicate::Kind::NotEqual: return "ne";
    case Predicate::Kind::AbsAtMost: return "le";
    case Predicate::Kind::AbsAbove: return "gt";
  }
  return "?";
}

inline void write_fn(std::string& out, std::size_t dim, const NodeList& nodes);

inline void write_node(std::string& out, const Node& n, std::size_t dim) {
  switch (n.op) {
    case Op::Coord: out += "(x " + std::to_string(n.index) + ")"; return;
    case Op::Const: out += "(c " + format_complex(n.constant) + ")"; return;
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
      out += "(";
      out += op_keyword(n.op);
      out += " ";
      write_node(out, *n.args[0], dim);
      out += " ";
      write_node(out, *n.args[1], dim);
      out += ")";
      return;
    case Op::Neg: case Op::Exp: case Op::Log:
      out += "(";
      out += op_keyword(n.op);
      out += " ";
      write_node(out, *n.args[0], dim);
      out += ")";
      return;
    case Op::PowConst:
      out += "(pow " + format_complex(n.constant) + " ";
      write_node(out, *n.args[0], dim);
      out += ")";
      return;
    case Op::Indicator:
      out += "(ind ";
      out += predicate_keyword(n.predicate.kind);
      out += " " + format_real(n.predicate.threshold) + " ";
      write_node(out, *n.args[0], dim);
      out += ")";
      return;
    case Op::Compose: {
      out += "(compose ";
      write_fn(out, dim, *n.inner);
      out += " ";
      write_node(out, *n.args[0], n.inner->size());
      out += ")";
      return;
    }
  }
}

inline void write_fn(std::string& out, std::size_t dim, const NodeList& nodes) {
  out += "(fn " + std::to_string(dim);
  for (const auto& p : nodes) {
    out += " ";
    write_node(out, *p, dim);
  }
  out += ")";
}

class SexprParser {
 public:
  explicit SexprParser(std::string_view text) : text_(text) {}

  RepFn parse_function() {
    RepFn f = function();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw UsageError("expression parse error at offset " + std::to_string(pos_) + ": " + msg);
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string_view atom() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')')
      ++pos_;
    if (start == pos_) fail("expected a token");
    return text_.substr(start, pos_ - start);
  }
  std::size_t index() {
    const std::string_view a = atom();
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(a.data(), a.data() + a.size(), v);
    if (ec != std::errc() || p != a.data() + a.size()) fail("expected a non-negative integer");
    return v;
  }
  Complex number() {
    const std::size_t at = pos_;
    try {
      return parse_complex(atom());
    } catch (const UsageError&) {
      pos_ = at;
      fail("malformed number");
    }
  }

  RepFn function() {
    expect('(');
    if (atom() != "fn") fail("expected 'fn'");
    const std::size_t dim = index();
    std::vector<Expr> outs;
    skip_ws();
    while (pos_ < text_.size() && text_[pos_] != ')') {
      outs.push_back(expr());
      skip_ws();
    }
    expect(')');
    return RepFn(dim, std::move(outs));
  }

  Expr expr() {
    expect('(');
    const std::string_view head = atom();
    Expr result = [&]() -> Expr {
      if (head == "x") return coord(index());
      if (head == "c") return constant(number());
      if (head == "add" || head == "sub" || head == "mul" || head == "div") {
        Expr a = expr();
        Expr b = expr();
        if (head == "add") return a + b;
        if (head == "sub") return a - b;
        if (head == "mul") return a * b;
        return a / b;
      }
      if (head == "neg") return -expr();
      if (head == "exp") return exp(expr());
      if (head == "log") return log(expr());
      if (head == "pow") {
        const Complex p = number();
        return pow(expr(), p);
      }
      if (head == "ind") {
        const std::string_view kind = atom();
        const double thr = number().real();
        Predicate pred;
        if (kind == "eq") pred = Predicate::equal(thr);
        else if (kind == "ne") pred = Predicate::not_equal(thr);
        else if (kind == "le") pred = Predicate::abs_at_most(thr);
        else if (kind == "gt") pred = Predicate::abs_above(thr);
        else fail("unknown predicate '" + std::string(kind) + "'");
        return indicator(pred, expr());
      }
      if (head == "compose") {
        const RepFn inner = function();
        Expr outer = expr();
        if (max_coord(outer.node()) >= static_cast<long>(inner.output_dim()))
          fail("compose body reads beyond the inner function's outputs");
        return Expr(make_node({Op::Compose, 0, {}, {}, {outer.ptr()}, inner.shared_nodes()}));
      }
      fail("unknown operator '" + std::string(head) + "'");
    }();
    expect(')');
    return result;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string to_string(const RepFn& f) {
  std::string out;
  detail::write_fn(out, f.input_dim(), f.nodes());
  return out;
}

inline RepFn parse_repfn(std::string_view text) { return detail::SexprParser(text).parse_function(); }

}  // namespace repcalc
