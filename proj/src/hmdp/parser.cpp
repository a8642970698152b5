#include <cctype>
#include <fstream>
#include <sstream>

#include "hsdp/hmdp.hpp"
#include "hsdp/prune.hpp"

namespace hsdp {

DomainError::DomainError(Kind kind, const std::string& msg, int line, int col)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + msg
                                  : msg),
      kind_(kind),
      line_(line),
      col_(col) {}

namespace {

struct Token {
  enum class Type { kIdent, kNumber, kString, kPunct, kEnd };
  Type type = Type::kEnd;
  std::string text;
  int line = 0;
  int col = 0;
};

std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t k) {
    for (std::size_t j = 0; j < k; ++j) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      if (j < src.size() && src[j] == '\'') ++j;
      t.type = Token::Type::kIdent;
      t.text = src.substr(start, j - start);
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && src[j] == '.') {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      t.type = Token::Type::kNumber;
      t.text = src.substr(start, j - start);
      advance(j - i);
    } else if (c == '"') {
      std::size_t j = i + 1;
      while (j < src.size() && src[j] != '"' && src[j] != '\n') ++j;
      if (j >= src.size() || src[j] != '"')
        throw DomainError(DomainError::Kind::kSyntax, "unterminated string", line, col);
      t.type = Token::Type::kString;
      t.text = src.substr(i + 1, j - i - 1);
      advance(j + 1 - i);
    } else {
      static const char* two[] = {">=", "<=", "&&", "||"};
      t.type = Token::Type::kPunct;
      for (const char* p : two)
        if (src.compare(i, 2, p) == 0) t.text = p;
      if (t.text.empty()) {
        if (std::string("{}()[];:,=+-*/^!<>").find(c) == std::string::npos)
          throw DomainError(DomainError::Kind::kSyntax, std::string("unexpected character '") + c + "'", line, col);
        t.text = std::string(1, c);
      }
      advance(t.text.size());
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

struct Backtrack {};

struct Cond {
  enum class Kind { kTrue, kFalse, kBool, kIneq, kAnd, kOr, kNot };
  Kind kind = Kind::kTrue;
  VarId var{};
  Polynomial poly;
  bool strict = false;
  std::vector<Cond> kids;
};

using Conj = std::vector<Literal>;
constexpr std::size_t kDnfLimit = 4096;

class Parser {
 public:
  explicit Parser(const std::string& text) : toks_(lex(text)) {
    model_.store = std::make_shared<XaddStore>();
  }

  HmdpModel run() {
    bool have_horizon = false;
    while (!at_end()) {
      const Token& t = peek();
      if (is_word("cvariables") || is_word("bvariables")) {
        parse_vars(next().text == "bvariables");
      } else if (is_word("action")) {
        parse_action();
      } else if (is_word("reward")) {
        next();
        expect("=");
        if (model_.reward) fail(t, "duplicate reward");
        model_.reward = parse_value_expr();
        expect(";");
      } else if (is_word("discount")) {
        next();
        expect("=");
        model_.discount = parse_number();
        expect(";");
      } else if (is_word("horizon")) {
        next();
        expect("=");
        Rational h = parse_number();
        if (h.get_den() != 1) fail(t, "horizon must be an integer");
        model_.horizon = static_cast<int>(h.get_num().get_si());
        have_horizon = true;
        expect(";");
      } else {
        fail(t, "expected a declaration, got '" + t.text + "'");
      }
    }
    if (!have_horizon) throw DomainError(DomainError::Kind::kSemantic, "missing horizon");
    validate(model_);
    return std::move(model_);
  }

 private:
  XaddStore& store() { return *model_.store; }
  VarRegistry& vars() { return model_.store->vars(); }

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool at_end() const { return peek().type == Token::Type::kEnd; }
  bool is_punct(const char* p, std::size_t k = 0) const {
    return peek(k).type == Token::Type::kPunct && peek(k).text == p;
  }
  bool is_word(const char* w, std::size_t k = 0) const {
    return peek(k).type == Token::Type::kIdent && peek(k).text == w;
  }
  bool accept(const char* p) {
    if (!is_punct(p)) return false;
    next();
    return true;
  }
  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw DomainError(DomainError::Kind::kSyntax, msg, t.line, t.col);
  }
  [[noreturn]] void semantic(const Token& t, const std::string& msg) const {
    throw DomainError(DomainError::Kind::kSemantic, msg, t.line, t.col);
  }
  void expect(const char* p) {
    if (!is_punct(p)) {
      const Token& t = peek();
      fail(t, std::string("expected '") + p + "', got '" + (t.type == Token::Type::kEnd ? "end of input" : t.text) +
                  "'");
    }
    next();
  }
  std::string expect_ident() {
    if (peek().type != Token::Type::kIdent) fail(peek(), "expected an identifier");
    return next().text;
  }

  Rational parse_number() {
    bool neg = accept("-");
    if (peek().type != Token::Type::kNumber) fail(peek(), "expected a number");
    Rational r = parse_rational(next().text);
    if (accept("/")) {
      if (peek().type != Token::Type::kNumber) fail(peek(), "expected a number");
      Rational d = parse_rational(next().text);
      if (d == 0) fail(peek(), "division by zero");
      r /= d;
    }
    return neg ? Rational(-r) : r;
  }

  Interval parse_interval() {
    const Token& t = peek();
    expect("[");
    Interval iv{parse_number(), 0};
    expect(",");
    iv.hi = parse_number();
    expect("]");
    if (iv.hi < iv.lo) semantic(t, "empty interval");
    return iv;
  }

  void parse_vars(bool boolean) {
    expect("{");
    while (!accept("}")) {
      const Token& t = peek();
      std::string name = expect_ident();
      if (name.find('\'') != std::string::npos) fail(t, "state variable names cannot be primed");
      if (vars().find(name)) semantic(t, "duplicate variable '" + name + "'");
      std::optional<Interval> bounds;
      if (!boolean) {
        expect(":");
        bounds = parse_interval();
      }
      VarId v = vars().add_state(name, boolean, bounds);
      (boolean ? model_.bool_vars : model_.cont_vars).push_back(v);
      expect(";");
    }
  }

  void parse_action() {
    next();
    ActionSchema a;
    const Token& nt = peek();
    if (nt.type == Token::Type::kString)
      a.name = next().text;
    else
      a.name = expect_ident();
    if (a.name.empty()) fail(nt, "empty action name");
    if (model_.find_action(a.name)) semantic(nt, "duplicate action '" + a.name + "'");
    // the parameter list may be left out entirely
    bool list = accept("(");
    if (list && !is_punct(")")) {
      do {
        const Token& pt = peek();
        std::string name = expect_ident();
        expect(":");
        Interval bounds = parse_interval();
        Interval grid = bounds;
        if (is_word("grid")) {
          next();
          grid = parse_interval();
        }
        VarId v;
        try {
          v = vars().add_param(name, bounds);
        } catch (const ExprError& e) {
          semantic(pt, e.what());
        }
        for (auto& p : a.params)
          if (p.var == v) semantic(pt, "duplicate parameter '" + name + "'");
        a.params.push_back({v, bounds, grid});
      } while (accept(","));
    }
    if (list) expect(")");
    expect("{");
    while (!accept("}")) {
      const Token& t = peek();
      if (is_word("transition") || is_word("cpf")) {
        bool cpf = next().text == "cpf";
        const Token& vt = peek();
        VarId v = lookup(expect_ident(), vt);
        VarKind want = cpf ? VarKind::kPrimedBoolean : VarKind::kPrimedContinuous;
        if (vars().kind(v) != want)
          semantic(vt, std::string(cpf ? "cpf" : "transition") + " target must be a primed " +
                           (cpf ? "boolean" : "continuous") + " variable");
        auto& slot = cpf ? a.bool_cpfs : a.cont_transitions;
        if (slot.count(v)) semantic(vt, "duplicate definition for " + vars().name(v));
        expect("=");
        slot[v] = parse_value_expr();
        expect(";");
      } else if (is_word("reward")) {
        next();
        expect("=");
        if (a.reward) semantic(t, "duplicate reward in action");
        a.reward = parse_value_expr();
        expect(";");
      } else {
        fail(t, "expected transition, cpf or reward");
      }
    }
    model_.actions.push_back(std::move(a));
  }

  VarId lookup(const std::string& name, const Token& t) {
    auto v = vars().find(name);
    if (!v) semantic(t, "unbound variable '" + name + "'");
    return *v;
  }

  // ---- polynomials

  Polynomial parse_poly() {
    Polynomial p = parse_poly_term();
    for (;;) {
      if (is_punct("+") && !is_word("case", 1)) {
        next();
        p = p + parse_poly_term();
      } else if (is_punct("-") && !is_word("inf", 1)) {
        next();
        p = p - parse_poly_term();
      } else {
        return p;
      }
    }
  }

  Polynomial parse_poly_term() {
    Polynomial p = parse_poly_unary();
    for (;;) {
      if (accept("*")) {
        p = p * parse_poly_unary();
      } else if (is_punct("/")) {
        const Token& t = next();
        Polynomial d = parse_poly_unary();
        if (!d.is_constant()) fail(t, "division by a non-constant");
        if (d.constant_value() == 0) fail(t, "division by zero");
        Rational inv = 1 / d.constant_value();
        p = inv * p;
      } else {
        return p;
      }
    }
  }

  Polynomial parse_poly_unary() {
    if (accept("-")) return -parse_poly_unary();
    Polynomial base = parse_poly_atom();
    if (accept("^")) {
      const Token& t = peek();
      if (t.type != Token::Type::kNumber) fail(t, "expected an integer exponent");
      Rational e = parse_rational(next().text);
      if (e.get_den() != 1 || e < 0 || e > 64) fail(t, "bad exponent");
      base = base.pow(static_cast<unsigned>(e.get_num().get_ui()));
    }
    return base;
  }

  Polynomial parse_poly_atom() {
    const Token& t = peek();
    if (t.type == Token::Type::kNumber) return Polynomial::constant(parse_rational(next().text));
    if (t.type == Token::Type::kIdent) {
      if (t.text == "inf" || t.text == "case" || t.text == "true" || t.text == "false") fail(t, "expected an expression");
      VarId v = lookup(t.text, t);
      if (is_boolean_kind(vars().kind(v))) {
        if (trial_) throw Backtrack{};
        semantic(t, "boolean variable '" + t.text + "' used in arithmetic");
      }
      next();
      return Polynomial::variable(v);
    }
    if (accept("(")) {
      Polynomial p = parse_poly();
      expect(")");
      return p;
    }
    fail(t, "expected an expression");
  }

  // ---- conditions

  Cond parse_cond() {
    Cond c = parse_cond_and();
    if (!is_punct("||")) return c;
    Cond o;
    o.kind = Cond::Kind::kOr;
    o.kids.push_back(std::move(c));
    while (accept("||")) o.kids.push_back(parse_cond_and());
    return o;
  }

  Cond parse_cond_and() {
    Cond c = parse_cond_not();
    if (!is_punct("&&")) return c;
    Cond o;
    o.kind = Cond::Kind::kAnd;
    o.kids.push_back(std::move(c));
    while (accept("&&")) o.kids.push_back(parse_cond_not());
    return o;
  }

  Cond parse_cond_not() {
    if (accept("!")) {
      Cond c;
      c.kind = Cond::Kind::kNot;
      c.kids.push_back(parse_cond_not());
      return c;
    }
    return parse_cond_atom();
  }

  static bool is_comparison(const Token& t) {
    return t.type == Token::Type::kPunct && (t.text == ">=" || t.text == "<=" || t.text == ">" || t.text == "<");
  }

  static Cond ineq(const Polynomial& lhs, const std::string& op, const Polynomial& rhs) {
    Cond c;
    c.kind = Cond::Kind::kIneq;
    c.strict = op == ">" || op == "<";
    c.poly = (op == ">=" || op == ">") ? lhs - rhs : rhs - lhs;
    return c;
  }

  Cond parse_cond_atom() {
    const Token& t = peek();
    if (is_word("true") || is_word("false")) {
      Cond c;
      c.kind = next().text == "true" ? Cond::Kind::kTrue : Cond::Kind::kFalse;
      return c;
    }
    std::size_t save = pos_;
    bool outer = trial_;
    trial_ = true;
    try {
      Polynomial lhs = parse_poly();
      if (is_comparison(peek())) {
        trial_ = outer;
        std::vector<Cond> parts;
        while (is_comparison(peek())) {
          std::string op = next().text;
          Polynomial rhs = parse_poly();
          parts.push_back(ineq(lhs, op, rhs));
          lhs = std::move(rhs);
        }
        if (parts.size() == 1) return std::move(parts[0]);
        Cond c;
        c.kind = Cond::Kind::kAnd;
        c.kids = std::move(parts);
        return c;
      }
    } catch (const Backtrack&) {
    } catch (const DomainError& e) {
      if (e.kind() != DomainError::Kind::kSyntax) throw;
    }
    trial_ = outer;
    pos_ = save;
    if (accept("(")) {
      Cond c = parse_cond();
      expect(")");
      return c;
    }
    if (t.type == Token::Type::kIdent) {
      VarId v = lookup(t.text, t);
      if (!is_boolean_kind(vars().kind(v))) fail(t, "expected a comparison after '" + t.text + "'");
      next();
      Cond c;
      c.kind = Cond::Kind::kBool;
      c.var = v;
      return c;
    }
    fail(t, "expected a condition");
  }

  NodeId build_cond(const Cond& c, NodeId hi, NodeId lo) {
    switch (c.kind) {
      case Cond::Kind::kTrue:
        return hi;
      case Cond::Kind::kFalse:
        return lo;
      case Cond::Kind::kBool:
        return store().bool_node(c.var, hi, lo);
      case Cond::Kind::kIneq:
        return store().ineq_node(c.poly, c.strict, hi, lo);
      case Cond::Kind::kNot:
        return build_cond(c.kids[0], lo, hi);
      case Cond::Kind::kAnd: {
        NodeId r = hi;
        for (auto it = c.kids.rbegin(); it != c.kids.rend(); ++it) r = build_cond(*it, r, lo);
        return r;
      }
      case Cond::Kind::kOr: {
        NodeId r = lo;
        for (auto it = c.kids.rbegin(); it != c.kids.rend(); ++it) r = build_cond(*it, hi, r);
        return r;
      }
    }
    return lo;
  }

  // Disjunctive normal form as decision literals. Empty optional when the
  // expansion is too large to check.
  std::optional<std::vector<Conj>> dnf(const Cond& c, bool positive) {
    switch (c.kind) {
      case Cond::Kind::kTrue:
      case Cond::Kind::kFalse:
        if ((c.kind == Cond::Kind::kTrue) == positive) return std::vector<Conj>{Conj{}};
        return std::vector<Conj>{};
      case Cond::Kind::kBool:
        return std::vector<Conj>{Conj{{store().intern(Decision::boolean(c.var)), positive}}};
      case Cond::Kind::kIneq: {
        NormalizedIneq n = normalize_ineq(c.poly, c.strict);
        if (n.constant) {
          if (*n.constant == positive) return std::vector<Conj>{Conj{}};
          return std::vector<Conj>{};
        }
        return std::vector<Conj>{Conj{{store().intern(n.decision), positive != n.negated}}};
      }
      case Cond::Kind::kNot:
        return dnf(c.kids[0], !positive);
      case Cond::Kind::kAnd:
      case Cond::Kind::kOr: {
        bool conj = (c.kind == Cond::Kind::kAnd) == positive;
        std::vector<Conj> acc;
        if (conj) acc.push_back({});
        for (auto& k : c.kids) {
          auto sub = dnf(k, positive);
          if (!sub) return std::nullopt;
          if (conj) {
            std::vector<Conj> prod;
            for (auto& a : acc)
              for (auto& b : *sub) {
                Conj m = a;
                m.insert(m.end(), b.begin(), b.end());
                prod.push_back(std::move(m));
                if (prod.size() > kDnfLimit) return std::nullopt;
              }
            acc = std::move(prod);
          } else {
            acc.insert(acc.end(), sub->begin(), sub->end());
            if (acc.size() > kDnfLimit) return std::nullopt;
          }
        }
        return acc;
      }
    }
    return std::nullopt;
  }

  void check_overlap(const std::vector<std::pair<Cond, Token>>& parts) {
    std::vector<std::optional<std::vector<Conj>>> forms;
    for (auto& [c, t] : parts) forms.push_back(dnf(c, true));
    FeasibilityChecker checker(store());
    for (std::size_t i = 0; i < parts.size(); ++i)
      for (std::size_t j = i + 1; j < parts.size(); ++j) {
        if (!forms[i] || !forms[j]) continue;
        for (auto& a : *forms[i])
          for (auto& b : *forms[j]) {
            Conj m = a;
            m.insert(m.end(), b.begin(), b.end());
            bool ok;
            try {
              ok = checker.feasible(m);
            } catch (const XaddError&) {
              continue;  // nonlinear: cannot decide
            }
            if (ok)
              semantic(parts[j].second, "case partition overlaps partition " + std::to_string(i + 1) +
                                            " (line " + std::to_string(parts[i].second.line) + ")");
          }
      }
  }

  NodeId parse_leaf() {
    if (is_word("inf")) {
      next();
      return store().pos_inf();
    }
    if (is_punct("-") && is_word("inf", 1)) {
      next();
      next();
      return store().neg_inf();
    }
    return store().poly(parse_poly());
  }

  NodeId parse_case() {
    next();
    expect("{");
    std::vector<std::pair<Cond, Token>> parts;
    std::vector<NodeId> leaves;
    while (!accept("}")) {
      Token t = peek();
      Cond c = parse_cond();
      expect(":");
      leaves.push_back(parse_leaf());
      expect(";");
      parts.emplace_back(std::move(c), t);
    }
    check_overlap(parts);
    NodeId r = store().neg_inf();
    for (std::size_t i = parts.size(); i-- > 0;) r = build_cond(parts[i].first, leaves[i], r);
    return tidy(r);
  }

  NodeId tidy(NodeId r) {
    r = store().reorder(r);
    try {
      Pruner pr(store());
      r = pr.prune_inconsistent(r);
    } catch (const XaddError&) {
      // nonlinear decisions stay unpruned
    }
    return r;
  }

  NodeId parse_value_expr() {
    NodeId acc = parse_summand();
    while (accept("+")) acc = store().apply(acc, parse_summand(), ApplyOp::kAdd);
    return tidy(acc);
  }

  NodeId parse_summand() {
    if (is_word("case")) return parse_case();
    return parse_leaf();
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  bool trial_ = false;
  HmdpModel model_;
};

}  // namespace

HmdpModel parse_domain(const std::string& text) { return Parser(text).run(); }

HmdpModel load_domain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError(DomainError::Kind::kSemantic, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_domain(ss.str());
}

}  // namespace hsdp
