#include "contactlab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "contactlab/error.hpp"

namespace contactlab {

enum class NodeKind { Number, Variable, Add, Sub, Mul, Div, Pow, Neg, Call };

class ExprNode {
 public:
  NodeKind kind;
  double number = 0.0;
  std::string name;  // variable or function name
  std::vector<ExprPtr> args;

  static ExprPtr make_number(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Number;
    n->number = v;
    return n;
  }
  static ExprPtr make_var(std::string name) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Variable;
    n->name = std::move(name);
    return n;
  }
  static ExprPtr make(NodeKind k, std::vector<ExprPtr> args) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->args = std::move(args);
    return n;
  }
  static ExprPtr make_call(std::string fn, std::vector<ExprPtr> args) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Call;
    n->name = std::move(fn);
    n->args = std::move(args);
    return n;
  }
};

namespace {

struct FnInfo {
  int arity;
};

const std::unordered_map<std::string, FnInfo>& functions() {
  static const std::unordered_map<std::string, FnInfo> table = {
      {"sin", {1}},  {"cos", {1}},   {"tan", {1}},    {"exp", {1}},
      {"log", {1}},  {"sqrt", {1}},  {"atan2", {2}},  {"bump01", {1}},
      {"smoothstep", {3}},
  };
  return table;
}

struct Parser {
  const std::string& src;
  size_t pos = 0;

  explicit Parser(const std::string& s) : src(s) {}

  [[noreturn]] void fail(size_t at, const std::string& expected) {
    std::ostringstream os;
    os << "at byte " << at << ": expected " << expected;
    throw Error(ErrorCode::SyntaxError, os.str());
  }

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < src.size() && src[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < src.size() ? src[pos] : '\0';
  }

  ExprPtr parse_expression() { return parse_additive(); }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_multiplicative();
    for (;;) {
      if (eat('+'))
        lhs = ExprNode::make(NodeKind::Add, {lhs, parse_multiplicative()});
      else if (eat('-'))
        lhs = ExprNode::make(NodeKind::Sub, {lhs, parse_multiplicative()});
      else
        return lhs;
    }
  }

  ExprPtr parse_multiplicative() {
    ExprPtr lhs = parse_unary();
    for (;;) {
      if (eat('*'))
        lhs = ExprNode::make(NodeKind::Mul, {lhs, parse_unary()});
      else if (eat('/'))
        lhs = ExprNode::make(NodeKind::Div, {lhs, parse_unary()});
      else
        return lhs;
    }
  }

  ExprPtr parse_unary() {
    if (eat('-')) return ExprNode::make(NodeKind::Neg, {parse_unary()});
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    if (eat('^')) {
      // right-associative, binds tighter than unary minus on the right side
      ExprPtr expo = parse_unary();
      return ExprNode::make(NodeKind::Pow, {base, expo});
    }
    return base;
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (pos >= src.size()) fail(pos, "an operand");
    const char c = src[pos];
    if (c == '(') {
      ++pos;
      ExprPtr e = parse_expression();
      if (!eat(')')) fail(pos, "')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail(pos, "a number, identifier or '('");
  }

  ExprPtr parse_number() {
    size_t start = pos;
    const char* begin = src.c_str() + pos;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail(start, "a numeric literal");
    pos += static_cast<size_t>(end - begin);
    return ExprNode::make_number(v);
  }

  ExprPtr parse_identifier() {
    size_t start = pos;
    while (pos < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
      ++pos;
    std::string name = src.substr(start, pos - start);
    if (name == "pi") return ExprNode::make_number(M_PI);
    auto fn = functions().find(name);
    if (fn != functions().end()) {
      if (!eat('(')) fail(pos, "'(' after function name");
      std::vector<ExprPtr> args;
      if (peek() != ')') {
        args.push_back(parse_expression());
        while (eat(',')) args.push_back(parse_expression());
      }
      if (!eat(')')) fail(pos, "')'");
      if (static_cast<int>(args.size()) != fn->second.arity) {
        std::ostringstream os;
        os << "at byte " << start << ": expected " << fn->second.arity
           << " argument(s) for " << name;
        throw Error(ErrorCode::SyntaxError, os.str());
      }
      return ExprNode::make_call(name, std::move(args));
    }
    return ExprNode::make_var(std::move(name));
  }
};

void collect_vars(const ExprPtr& n, std::vector<std::string>& out) {
  if (!n) return;
  if (n->kind == NodeKind::Variable) {
    for (const auto& s : out)
      if (s == n->name) return;
    out.push_back(n->name);
    return;
  }
  for (const auto& a : n->args) collect_vars(a, out);
}

Jet eval_node(const ExprNode* n, const std::vector<std::string>& vars,
              const std::vector<Jet>& values, int nvars, int order) {
  switch (n->kind) {
    case NodeKind::Number:
      return Jet::constant(nvars, order, n->number);
    case NodeKind::Variable: {
      for (size_t i = 0; i < vars.size(); ++i)
        if (vars[i] == n->name) return values[i];
      throw Error(ErrorCode::UnknownIdentifier, n->name);
    }
    case NodeKind::Add:
      return eval_node(n->args[0].get(), vars, values, nvars, order) +
             eval_node(n->args[1].get(), vars, values, nvars, order);
    case NodeKind::Sub:
      return eval_node(n->args[0].get(), vars, values, nvars, order) -
             eval_node(n->args[1].get(), vars, values, nvars, order);
    case NodeKind::Mul:
      return eval_node(n->args[0].get(), vars, values, nvars, order) *
             eval_node(n->args[1].get(), vars, values, nvars, order);
    case NodeKind::Div:
      return eval_node(n->args[0].get(), vars, values, nvars, order) /
             eval_node(n->args[1].get(), vars, values, nvars, order);
    case NodeKind::Pow:
      return jet_pow(eval_node(n->args[0].get(), vars, values, nvars, order),
                     eval_node(n->args[1].get(), vars, values, nvars, order));
    case NodeKind::Neg:
      return -eval_node(n->args[0].get(), vars, values, nvars, order);
    case NodeKind::Call: {
      std::vector<Jet> a;
      a.reserve(n->args.size());
      for (const auto& arg : n->args)
        a.push_back(eval_node(arg.get(), vars, values, nvars, order));
      if (n->name == "sin") return jet_sin(a[0]);
      if (n->name == "cos") return jet_cos(a[0]);
      if (n->name == "tan") return jet_tan(a[0]);
      if (n->name == "exp") return jet_exp(a[0]);
      if (n->name == "log") return jet_log(a[0]);
      if (n->name == "sqrt") return jet_sqrt(a[0]);
      if (n->name == "atan2") return jet_atan2(a[0], a[1]);
      if (n->name == "bump01") return jet_bump01(a[0]);
      if (n->name == "smoothstep") return jet_smoothstep(a[0], a[1], a[2]);
      throw Error(ErrorCode::UnknownIdentifier, n->name);
    }
  }
  throw Error(ErrorCode::SyntaxError, "corrupt expression node");
}

int precedence(NodeKind k) {
  switch (k) {
    case NodeKind::Add:
    case NodeKind::Sub:
      return 1;
    case NodeKind::Mul:
    case NodeKind::Div:
      return 2;
    case NodeKind::Neg:
      return 3;
    case NodeKind::Pow:
      return 4;
    default:
      return 5;
  }
}

void print_node(const ExprNode* n, std::ostream& os, int parent_prec) {
  const int prec = precedence(n->kind);
  const bool parens = prec < parent_prec;
  if (parens) os << '(';
  switch (n->kind) {
    case NodeKind::Number: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n->number);
      os << buf;
      break;
    }
    case NodeKind::Variable:
      os << n->name;
      break;
    case NodeKind::Add:
      print_node(n->args[0].get(), os, prec);
      os << " + ";
      print_node(n->args[1].get(), os, prec + 1);
      break;
    case NodeKind::Sub:
      print_node(n->args[0].get(), os, prec);
      os << " - ";
      print_node(n->args[1].get(), os, prec + 1);
      break;
    case NodeKind::Mul:
      print_node(n->args[0].get(), os, prec);
      os << "*";
      print_node(n->args[1].get(), os, prec + 1);
      break;
    case NodeKind::Div:
      print_node(n->args[0].get(), os, prec);
      os << "/";
      print_node(n->args[1].get(), os, prec + 1);
      break;
    case NodeKind::Pow:
      print_node(n->args[0].get(), os, prec + 1);
      os << "^";
      print_node(n->args[1].get(), os, prec);
      break;
    case NodeKind::Neg:
      os << "-";
      print_node(n->args[0].get(), os, prec + 1);
      break;
    case NodeKind::Call:
      os << n->name << "(";
      for (size_t i = 0; i < n->args.size(); ++i) {
        if (i) os << ", ";
        print_node(n->args[i].get(), os, 0);
      }
      os << ")";
      break;
  }
  if (parens) os << ')';
}

bool same_node(const ExprNode* a, const ExprNode* b) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case NodeKind::Number:
      return a->number == b->number;
    case NodeKind::Variable:
      return a->name == b->name;
    case NodeKind::Call:
      if (a->name != b->name) return false;
      [[fallthrough]];
    default:
      if (a->args.size() != b->args.size()) return false;
      for (size_t i = 0; i < a->args.size(); ++i)
        if (!same_node(a->args[i].get(), b->args[i].get())) return false;
      return true;
  }
}

}  // namespace

Expr Expr::parse(const std::string& source) {
  Parser p(source);
  ExprPtr root = p.parse_expression();
  p.skip_ws();
  if (p.pos != source.size()) p.fail(p.pos, "end of input");
  return Expr(std::move(root));
}

void Expr::validate(const std::vector<std::string>& variables) const {
  for (const auto& v : free_variables()) {
    bool found = false;
    for (const auto& d : variables)
      if (d == v) {
        found = true;
        break;
      }
    if (!found) throw Error(ErrorCode::UnknownIdentifier, v);
  }
}

std::vector<std::string> Expr::free_variables() const {
  std::vector<std::string> out;
  collect_vars(root_, out);
  return out;
}

Jet Expr::eval(const std::vector<std::string>& variables,
               const std::vector<Jet>& values) const {
  if (!root_) throw Error(ErrorCode::SyntaxError, "empty expression");
  int nvars = values.empty() ? 0 : values[0].nvars;
  int order = 2;
  for (const auto& j : values) order = std::min(order, j.order);
  if (values.empty()) order = 2;
  return eval_node(root_.get(), variables, values, nvars, order);
}

double Expr::value(const std::unordered_map<std::string, double>& assignment) const {
  std::vector<std::string> vars;
  std::vector<Jet> vals;
  vars.reserve(assignment.size());
  for (const auto& [k, v] : assignment) {
    vars.push_back(k);
    vals.push_back(Jet::constant(0, 0, v));
  }
  return eval(vars, vals).v;
}

Jet2 Expr::jet2(const std::vector<std::string>& variables,
                const std::vector<double>& point) const {
  const int n = static_cast<int>(variables.size());
  std::vector<Jet> vals;
  vals.reserve(variables.size());
  for (int i = 0; i < n; ++i) vals.push_back(Jet::variable(n, 2, i, point[i]));
  Jet j = eval(variables, vals);
  Jet2 out;
  out.value = j.v;
  out.gradient = j.g;
  out.hessian.assign(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) out.hessian[i][k] = 0.5 * (j.hess(i, k) + j.hess(k, i));
  return out;
}

std::string Expr::pretty() const {
  std::ostringstream os;
  if (root_) print_node(root_.get(), os, 0);
  return os.str();
}

bool Expr::same_ast(const Expr& other) const {
  if (!root_ || !other.root_) return root_ == other.root_;
  return same_node(root_.get(), other.root_.get());
}

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NonSmoothPoint: return "NonSmoothPoint";
    case ErrorCode::DepthExceeded: return "DepthExceeded";
    case ErrorCode::UnparametrizedLevelSet: return "UnparametrizedLevelSet";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::OffManifoldPoint: return "OffManifoldPoint";
    case ErrorCode::DegreeOverflow: return "DegreeOverflow";
    case ErrorCode::DegreeUnderflow: return "DegreeUnderflow";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotContact: return "NotContact";
    case ErrorCode::EvenDimension: return "EvenDimension";
    case ErrorCode::NotClosed: return "NotClosed";
    case ErrorCode::ZeroPolynomial: return "ZeroPolynomial";
    case ErrorCode::NumericallyIndeterminate: return "NumericallyIndeterminate";
    case ErrorCode::EmptyBinding: return "EmptyBinding";
    case ErrorCode::TransversalityFailure: return "TransversalityFailure";
    case ErrorCode::NotAdapted: return "NotAdapted";
    case ErrorCode::TransversalityNotNegative: return "TransversalityNotNegative";
    case ErrorCode::NotTransverse: return "NotTransverse";
    case ErrorCode::NotContactFields: return "NotContactFields";
    case ErrorCode::HypothesisFailure: return "HypothesisFailure";
    case ErrorCode::KSearchExhausted: return "KSearchExhausted";
    case ErrorCode::DomainConditionFailure: return "DomainConditionFailure";
    case ErrorCode::NotContactResult: return "NotContactResult";
    case ErrorCode::FiberMismatch: return "FiberMismatch";
    case ErrorCode::SingularSplitting: return "SingularSplitting";
    case ErrorCode::NotClosedPotential: return "NotClosedPotential";
    case ErrorCode::BaseNotDominated: return "BaseNotDominated";
    case ErrorCode::EpsilonExhausted: return "EpsilonExhausted";
    case ErrorCode::BranchRestrictionNotContact: return "BranchRestrictionNotContact";
    case ErrorCode::DownstairsNotDominated: return "DownstairsNotDominated";
    case ErrorCode::ProfileViolation: return "ProfileViolation";
    case ErrorCode::PredictionMismatch: return "PredictionMismatch";
    case ErrorCode::StepCollapse: return "StepCollapse";
    case ErrorCode::LeftDomain: return "LeftDomain";
    case ErrorCode::SceneParseError: return "SceneParseError";
    case ErrorCode::UnknownCommand: return "UnknownCommand";
    case ErrorCode::SelectorNotFound: return "SelectorNotFound";
  }
  return "Error";
}

}  // namespace contactlab
