#include <cctype>
#include <cmath>
#include <cstdlib>

#include "harvestkit/errors.hpp"
#include "harvestkit/expansion.hpp"

namespace hk {

struct Expression::Node {
  enum Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Exp, Sin, Cos, Erf } op;
  double value = 0;
  int a = -1, b = -1;
};

namespace {

using Node = Expression::Node;

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  int parse_all() {
    int r = expr();
    skip();
    if (p_ != s_.size()) fail("unexpected character '" + std::string(1, s_[p_]) + "'");
    return r;
  }
  std::vector<Node> nodes;

 private:
  const std::string& s_;
  std::size_t p_ = 0;
  int depth_ = 0;

  [[noreturn]] void fail(const std::string& m) const { throw ParseError(m + " at position " + std::to_string(p_), p_); }

  void skip() {
    while (p_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[p_]))) ++p_;
  }
  bool eat(char c) {
    skip();
    if (p_ < s_.size() && s_[p_] == c) {
      ++p_;
      return true;
    }
    return false;
  }
  int add(Node::Op op, int a = -1, int b = -1, double v = 0) {
    nodes.push_back(Node{op, v, a, b});
    return static_cast<int>(nodes.size()) - 1;
  }

  // expr := term (('+'|'-') term)*
  int expr() {
    if (++depth_ > 200) fail("expression nested too deeply");
    int l = term();
    for (;;) {
      if (eat('+'))
        l = add(Node::Add, l, term());
      else if (eat('-'))
        l = add(Node::Sub, l, term());
      else
        break;
    }
    --depth_;
    return l;
  }
  // term := unary (('*'|'/') unary)*
  int term() {
    int l = unary();
    for (;;) {
      if (eat('*'))
        l = add(Node::Mul, l, unary());
      else if (eat('/'))
        l = add(Node::Div, l, unary());
      else
        break;
    }
    return l;
  }
  // unary := ('-'|'+') unary | power
  int unary() {
    if (eat('-')) {
      if (++depth_ > 200) fail("expression nested too deeply");
      int r = add(Node::Neg, unary());
      --depth_;
      return r;
    }
    if (eat('+')) return unary();
    return power();
  }
  // power := primary ('^' unary)?   right associative
  int power() {
    int base = primary();
    if (eat('^')) {
      if (++depth_ > 200) fail("expression nested too deeply");
      int r = add(Node::Pow, base, unary());
      --depth_;
      return r;
    }
    return base;
  }
  int primary() {
    skip();
    if (p_ >= s_.size()) fail("unexpected end of input");
    char c = s_[p_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = p_;
      while (p_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[p_]))) ++p_;
      std::string id = s_.substr(start, p_ - start);
      if (id == "t") return add(Node::Var);
      if (id == "pi") return add(Node::Num, -1, -1, 3.14159265358979323846);
      if (id == "e") return add(Node::Num, -1, -1, 2.71828182845904523536);
      Node::Op op;
      if (id == "exp")
        op = Node::Exp;
      else if (id == "sin")
        op = Node::Sin;
      else if (id == "cos")
        op = Node::Cos;
      else if (id == "erf")
        op = Node::Erf;
      else {
        p_ = start;
        fail("unknown identifier '" + id + "'");
      }
      if (!eat('(')) fail("expected '(' after " + id);
      int arg = expr();
      if (!eat(')')) fail("expected ')'");
      return add(op, arg);
    }
    if (eat('(')) {
      int r = expr();
      if (!eat(')')) fail("expected ')'");
      return r;
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }
  int number() {
    std::size_t start = p_;
    while (p_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p_]))) ++p_;
    if (p_ < s_.size() && s_[p_] == '.') {
      ++p_;
      while (p_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p_]))) ++p_;
    }
    if (p_ - start == 1 && s_[start] == '.') {
      p_ = start;
      fail("malformed number");
    }
    if (p_ < s_.size() && (s_[p_] == 'e' || s_[p_] == 'E')) {
      std::size_t q = p_ + 1;
      if (q < s_.size() && (s_[q] == '+' || s_[q] == '-')) ++q;
      if (q < s_.size() && std::isdigit(static_cast<unsigned char>(s_[q]))) {
        p_ = q;
        while (p_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p_]))) ++p_;
      }
    }
    std::string tok = s_.substr(start, p_ - start);
    return add(Node::Num, -1, -1, std::strtod(tok.c_str(), nullptr));
  }
};

double eval(const std::vector<Node>& n, int i, double t) {
  const Node& x = n[i];
  switch (x.op) {
    case Node::Num: return x.value;
    case Node::Var: return t;
    case Node::Neg: return -eval(n, x.a, t);
    case Node::Add: return eval(n, x.a, t) + eval(n, x.b, t);
    case Node::Sub: return eval(n, x.a, t) - eval(n, x.b, t);
    case Node::Mul: return eval(n, x.a, t) * eval(n, x.b, t);
    case Node::Div: return eval(n, x.a, t) / eval(n, x.b, t);
    case Node::Pow: return std::pow(eval(n, x.a, t), eval(n, x.b, t));
    case Node::Exp: return std::exp(eval(n, x.a, t));
    case Node::Sin: return std::sin(eval(n, x.a, t));
    case Node::Cos: return std::cos(eval(n, x.a, t));
    case Node::Erf: return std::erf(eval(n, x.a, t));
  }
  return 0;
}

}  // namespace

Expression Expression::parse(const std::string& text) {
  if (text.size() > 10000) throw ParseError("expression too long", 10000);
  Parser p(text);
  int root = p.parse_all();
  Expression e;
  e.text_ = text;
  e.nodes_ = std::make_shared<const std::vector<Node>>(std::move(p.nodes));
  e.root_ = root;
  return e;
}

double Expression::operator()(double t) const {
  if (!nodes_) throw PreconditionError("empty expression");
  return eval(*nodes_, root_, t);
}

}  // namespace hk
