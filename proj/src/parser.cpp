#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "pccsl/ast.hpp"

namespace pccsl::dsl {

std::string Diagnostic::to_string() const {
  const char* cat = category == Category::Lexical    ? "lexical"
                    : category == Category::Syntax   ? "syntax"
                                                     : "semantic";
  std::ostringstream out;
  out << line << ':' << col << ": " << cat << ": " << message;
  return out.str();
}

namespace {

enum class Tok {
  End, Ident, Number, String,
  LBrace, RBrace, LParen, RParen, LBracket, RBracket,
  Comma, Semi, Colon, Pipe, Arrow, Assign,
  EqEq, NotEq, Le, Ge, Lt, Gt, AndAnd, OrOr, Not,
  Plus, Minus, Star, Slash, Question,
  Error
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  bool is_integer = false;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= src_.size()) {
      t.kind = Tok::End;
      return t;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        advance();
      t.kind = Tok::Ident;
      t.text = std::string(src_.substr(start, pos_ - start));
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      return lex_number(t);
    }
    if (c == '"') return lex_string(t);
    advance();
    auto two = [&](char second, Tok yes, Tok no) {
      if (pos_ < src_.size() && src_[pos_] == second) {
        advance();
        t.kind = yes;
      } else {
        t.kind = no;
      }
    };
    switch (c) {
      case '{': t.kind = Tok::LBrace; break;
      case '}': t.kind = Tok::RBrace; break;
      case '(': t.kind = Tok::LParen; break;
      case ')': t.kind = Tok::RParen; break;
      case '[': t.kind = Tok::LBracket; break;
      case ']': t.kind = Tok::RBracket; break;
      case ',': t.kind = Tok::Comma; break;
      case ';': t.kind = Tok::Semi; break;
      case ':': t.kind = Tok::Colon; break;
      case '?': t.kind = Tok::Question; break;
      case '+': t.kind = Tok::Plus; break;
      case '*': t.kind = Tok::Star; break;
      case '/': t.kind = Tok::Slash; break;
      case '-': two('>', Tok::Arrow, Tok::Minus); break;
      case '=': two('=', Tok::EqEq, Tok::Assign); break;
      case '!': two('=', Tok::NotEq, Tok::Not); break;
      case '<': two('=', Tok::Le, Tok::Lt); break;
      case '>': two('=', Tok::Ge, Tok::Gt); break;
      case '&': two('&', Tok::AndAnd, Tok::Error); break;
      case '|': two('|', Tok::OrOr, Tok::Pipe); break;
      default:
        t.kind = Tok::Error;
        t.text = std::string(1, c);
        break;
    }
    if (t.kind == Tok::Error && t.text.empty()) t.text = std::string(1, c);
    return t;
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
        advance();
        advance();
        while (pos_ + 1 < src_.size() &&
               !(src_[pos_] == '*' && src_[pos_ + 1] == '/'))
          advance();
        if (pos_ + 1 < src_.size()) {
          advance();
          advance();
        } else {
          pos_ = src_.size();
        }
      } else {
        break;
      }
    }
  }

  Token lex_number(Token t) {
    std::size_t start = pos_;
    bool integral = true;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
      advance();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      integral = false;
      advance();
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        integral = false;
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          advance();
      } else {
        // not an exponent after all ("50e" followed by something else)
        while (pos_ > mark) {
          --pos_;
          --col_;
        }
      }
    }
    t.kind = Tok::Number;
    t.text = std::string(src_.substr(start, pos_ - start));
    t.number = std::strtod(t.text.c_str(), nullptr);
    t.is_integer = integral;
    return t;
  }

  Token lex_string(Token t) {
    advance();  // opening quote
    std::string out;
    while (pos_ < src_.size() && src_[pos_] != '"' && src_[pos_] != '\n') {
      out += src_[pos_];
      advance();
    }
    if (pos_ < src_.size() && src_[pos_] == '"') {
      advance();
      t.kind = Tok::String;
      t.text = std::move(out);
    } else {
      t.kind = Tok::Error;
      t.text = "unterminated string";
    }
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

bool is_decl_keyword(const std::string& s) {
  static const std::set<std::string> kw = {
      "use",    "const", "denseclocktype", "clock", "var",
      "expr",   "action", "paction",       "rel",   "query"};
  return kw.count(s) > 0;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lexer_(src) { bump(); }

  ParseResult run() {
    SpecAst ast;
    while (cur_.kind != Tok::End) {
      if (cur_.kind != Tok::Ident || !is_decl_keyword(cur_.text)) {
        error("expected a declaration keyword");
        recover();
        continue;
      }
      SourceLoc loc{cur_.line, cur_.col};
      std::string kw = cur_.text;
      bump();
      try {
        AstDecl decl = parse_decl(kw);
        ast.decls.push_back(std::move(decl));
        ast.locs.push_back(loc);
      } catch (const ParseAbort&) {
        recover();
      }
    }
    ParseResult result;
    result.diags = std::move(diags_);
    if (result.diags.empty()) result.ast = std::move(ast);
    return result;
  }

 private:
  struct ParseAbort {};

  [[noreturn]] void fail(const std::string& msg) {
    error(msg);
    throw ParseAbort{};
  }

  void error(const std::string& msg,
             Diagnostic::Category cat = Diagnostic::Category::Syntax) {
    if (diags_.size() < 128)
      diags_.push_back(Diagnostic{cat, cur_.line, cur_.col, msg});
  }

  void recover() {
    while (cur_.kind != Tok::End &&
           !(cur_.kind == Tok::Ident && is_decl_keyword(cur_.text)))
      bump();
  }

  void bump() {
    cur_ = lexer_.next();
    if (cur_.kind == Tok::Error)
      error("unexpected input: '" + cur_.text + "'",
            Diagnostic::Category::Lexical);
  }

  bool at_ident(const char* word) const {
    return cur_.kind == Tok::Ident && cur_.text == word;
  }

  void expect(Tok kind, const char* what) {
    if (cur_.kind != kind) fail(std::string("expected ") + what);
    bump();
  }

  std::string expect_ident(const char* what) {
    if (cur_.kind != Tok::Ident) fail(std::string("expected ") + what);
    std::string s = cur_.text;
    bump();
    return s;
  }

  void expect_keyword(const char* word) {
    if (!at_ident(word)) fail(std::string("expected '") + word + "'");
    bump();
  }

  double parse_number_or_const(bool allow_negative = true) {
    double sign = 1.0;
    if (allow_negative && cur_.kind == Tok::Plus) {
      bump();
    } else if (allow_negative && cur_.kind == Tok::Minus) {
      sign = -1.0;
      bump();
    }
    if (cur_.kind == Tok::Number) {
      double v = cur_.number;
      bump();
      return sign * v;
    }
    if (cur_.kind == Tok::Ident) {
      auto it = consts_.find(cur_.text);
      if (it == consts_.end())
        fail("unknown constant '" + cur_.text + "'");
      bump();
      return sign * it->second;
    }
    fail("expected a number");
  }

  /// NUMBER-or-const with a required time unit: us | ms | s.
  double parse_time() {
    double v = parse_number_or_const(false);
    if (cur_.kind != Tok::Ident)
      fail("expected a time unit (us, ms or s)");
    double scale;
    if (cur_.text == "us")
      scale = 1e-6;
    else if (cur_.text == "ms")
      scale = 1e-3;
    else if (cur_.text == "s")
      scale = 1.0;
    else
      fail("expected a time unit (us, ms or s)");
    bump();
    return v * scale;
  }

  AstDecl parse_decl(const std::string& kw) {
    if (kw == "use") return parse_use();
    if (kw == "const") return parse_const();
    if (kw == "denseclocktype") return parse_dense_type();
    if (kw == "clock") return parse_clock();
    if (kw == "var") return parse_var();
    if (kw == "expr") return parse_expr_decl();
    if (kw == "action") return parse_action();
    if (kw == "paction") return parse_paction();
    if (kw == "rel") return parse_relation();
    if (kw == "query") return parse_query();
    fail("unknown declaration");
  }

  AstUseDecl parse_use() {
    if (cur_.kind != Tok::String) fail("expected a file name string");
    AstUseDecl d{cur_.text};
    bump();
    return d;
  }

  AstConstDecl parse_const() {
    AstConstDecl d;
    d.name = expect_ident("constant name");
    expect(Tok::Assign, "'='");
    d.value = parse_number_or_const();
    consts_[d.name] = d.value;
    return d;
  }

  AstDenseTypeDecl parse_dense_type() {
    AstDenseTypeDecl d;
    d.name = expect_ident("type name");
    expect(Tok::LBrace, "'{'");
    expect_keyword("reference");
    d.reference = expect_ident("reference clock");
    expect(Tok::Semi, "';'");
    expect_keyword("factor");
    d.factor = parse_number_or_const();
    expect(Tok::Semi, "';'");
    if (at_ident("offset")) {
      bump();
      expect(Tok::LBrace, "'{'");
      while (cur_.kind != Tok::RBrace) {
        expect(Tok::LParen, "'('");
        std::string trig = expect_ident("trigger clock");
        expect(Tok::Comma, "','");
        double amount = parse_number_or_const();
        expect(Tok::RParen, "')'");
        d.offsets.emplace_back(trig, amount);
        if (cur_.kind == Tok::Comma) bump();
      }
      bump();  // '}'
    }
    if (at_ident("reset")) {
      bump();
      expect(Tok::LBrace, "'{'");
      while (cur_.kind != Tok::RBrace) {
        d.resets.push_back(expect_ident("reset clock"));
        if (cur_.kind == Tok::Comma) bump();
      }
      bump();
    }
    expect(Tok::RBrace, "'}'");
    return d;
  }

  AstClockDecl parse_clock() {
    AstClockDecl d;
    d.name = expect_ident("clock name");
    if (cur_.kind == Tok::Colon) {
      bump();
      d.dense = true;
      d.type = expect_ident("dense type name");
      return d;
    }
    expect_keyword("stimulus");
    AstStimulus& s = d.stimulus;
    if (at_ident("silent")) {
      bump();
      s.kind = StimulusKind::Silent;
    } else if (at_ident("periodic")) {
      bump();
      s.kind = StimulusKind::Periodic;
      expect(Tok::LParen, "'('");
      s.period = parse_time();
      expect(Tok::Comma, "','");
      expect_keyword("jitter");
      s.jitter = parse_time();
      expect(Tok::RParen, "')'");
    } else if (at_ident("uniform")) {
      bump();
      s.kind = StimulusKind::UniformInterarrival;
      expect(Tok::LParen, "'('");
      s.lo = parse_time();
      expect(Tok::Comma, "','");
      s.hi = parse_time();
      expect(Tok::RParen, "')'");
    } else if (at_ident("scripted")) {
      bump();
      s.kind = StimulusKind::Scripted;
      expect(Tok::LParen, "'('");
      while (cur_.kind != Tok::RParen) {
        s.times.push_back(parse_time());
        if (cur_.kind == Tok::Comma) bump();
      }
      bump();
    } else {
      fail("expected periodic, uniform, scripted or silent");
    }
    return d;
  }

  AstVarDecl parse_var() {
    AstVarDecl d;
    d.name = expect_ident("variable name");
    expect(Tok::Colon, "':'");
    std::string dom = expect_ident("int, real or bool");
    expect(Tok::Assign, "'='");
    if (dom == "int") {
      d.domain = VarDomain::Int;
      double v = parse_number_or_const();
      if (std::floor(v) != v) fail("integer initial value required");
      d.initial = Value::ofInt(static_cast<std::int64_t>(v));
    } else if (dom == "real") {
      d.domain = VarDomain::Real;
      d.initial = Value::ofReal(parse_number_or_const());
    } else if (dom == "bool") {
      d.domain = VarDomain::Bool;
      if (at_ident("true")) {
        d.initial = Value::ofBool(true);
      } else if (at_ident("false")) {
        d.initial = Value::ofBool(false);
      } else {
        fail("expected true or false");
      }
      bump();
    } else {
      fail("expected int, real or bool");
    }
    return d;
  }

  AstExprDecl parse_expr_decl() {
    AstExprDecl d;
    d.name = expect_ident("expression clock name");
    expect(Tok::Assign, "'='");
    std::string op = expect_ident("expression kind");
    expect(Tok::LParen, "'('");
    if (op == "filter") {
      d.kind = ExprKind::FilterBy;
      d.operands.push_back(expect_ident("base clock"));
      expect(Tok::Comma, "','");
      if (cur_.kind != Tok::String) fail("expected a binary word string");
      try {
        d.word = filter_word_to_string(parse_filter_word(cur_.text));
      } catch (const SpecError& e) {
        fail(e.what());
      }
      bump();
    } else if (op == "delay") {
      d.operands.push_back(expect_ident("reference clock"));
      expect(Tok::Comma, "','");
      if (cur_.kind == Tok::LBracket) {
        bump();
        d.kind = ExprKind::IntervalDelayFor;
        d.interval = true;
        d.lower = parse_number_or_const(false);
        expect(Tok::Comma, "','");
        d.upper = parse_number_or_const(false);
        expect(Tok::RBracket, "']'");
      } else {
        d.kind = ExprKind::DelayFor;
        d.lower = d.upper = parse_number_or_const(false);
      }
      expect(Tok::Comma, "','");
      d.operands.push_back(expect_ident("base clock"));
    } else if (op == "periodic") {
      d.kind = ExprKind::PeriodicOn;
      d.operands.push_back(expect_ident("base clock"));
      expect(Tok::Comma, "','");
      double n = parse_number_or_const(false);
      if (std::floor(n) != n || n < 1) fail("periodic needs an integer n >= 1");
      d.period_n = static_cast<std::int64_t>(n);
    } else if (op == "ite") {
      d.kind = ExprKind::Ite;
      d.predicate = parse_or();
      expect(Tok::Comma, "','");
      d.operands.push_back(expect_ident("then clock"));
      expect(Tok::Comma, "','");
      d.operands.push_back(expect_ident("else clock"));
    } else if (op == "inf" || op == "sup") {
      d.kind = op == "inf" ? ExprKind::Infimum : ExprKind::Supremum;
      d.operands.push_back(expect_ident("clock"));
      while (cur_.kind == Tok::Comma) {
        bump();
        d.operands.push_back(expect_ident("clock"));
      }
      if (d.operands.size() < 2) fail("inf/sup need at least two clocks");
    } else if (op == "discretize") {
      d.kind = ExprKind::DiscretizedBy;
      d.operands.push_back(expect_ident("dense clock"));
      expect(Tok::Comma, "','");
      d.step = parse_number_or_const(false);
    } else {
      fail("unknown expression kind '" + op + "'");
    }
    expect(Tok::RParen, "')'");
    return d;
  }

  std::vector<AstAssign> parse_assign_block() {
    expect(Tok::LBrace, "'{'");
    std::vector<AstAssign> body;
    while (cur_.kind != Tok::RBrace) {
      AstAssign a;
      a.var = expect_ident("variable name");
      expect(Tok::Assign, "'='");
      a.rhs = parse_or();
      body.push_back(std::move(a));
      if (cur_.kind == Tok::Semi) bump();
    }
    bump();
    return body;
  }

  AstActionDecl parse_action() {
    AstActionDecl d;
    d.trigger = expect_ident("trigger clock");
    expect(Tok::Arrow, "'->'");
    d.body = parse_assign_block();
    return d;
  }

  AstPActionDecl parse_paction() {
    AstPActionDecl d;
    d.trigger = expect_ident("trigger clock");
    expect(Tok::Arrow, "'->'");
    expect(Tok::LBrace, "'{'");
    while (true) {
      AstBranch br;
      br.p = parse_number_or_const(false);
      expect(Tok::Colon, "':'");
      br.body = parse_assign_block();
      d.branches.push_back(std::move(br));
      if (cur_.kind == Tok::Pipe) {
        bump();
        continue;
      }
      break;
    }
    expect(Tok::RBrace, "'}'");
    return d;
  }

  AstRelationDecl parse_relation() {
    AstRelationDecl d;
    d.name = expect_ident("relation name");
    expect(Tok::Assign, "'='");
    std::string kind = expect_ident("relation kind");
    if (kind == "subclock")
      d.kind = RelationKind::Subclock;
    else if (kind == "coincidence")
      d.kind = RelationKind::Coincidence;
    else if (kind == "exclusion")
      d.kind = RelationKind::Exclusion;
    else if (kind == "precedence")
      d.kind = RelationKind::Precedence;
    else if (kind == "causality")
      d.kind = RelationKind::Causality;
    else
      fail("unknown relation kind '" + kind + "'");
    expect(Tok::LBracket, "'['");
    d.threshold = parse_number_or_const(false);
    expect(Tok::RBracket, "']'");
    expect(Tok::LParen, "'('");
    d.clocks.push_back(expect_ident("clock"));
    while (cur_.kind == Tok::Comma) {
      bump();
      d.clocks.push_back(expect_ident("clock"));
    }
    expect(Tok::RParen, "')'");
    if (at_ident("within")) {
      bump();
      d.bound = parse_time();
    }
    return d;
  }

  AstObservable parse_observable() {
    AstObservable o;
    std::string name = expect_ident("observable");
    if ((name == "history" || name == "dense") && cur_.kind == Tok::LParen) {
      bump();
      o.kind = name == "history" ? ObservableKind::History : ObservableKind::Dense;
      o.name = expect_ident("clock");
      expect(Tok::RParen, "')'");
    } else {
      o.kind = ObservableKind::Auto;
      o.name = name;
    }
    return o;
  }

  AstQueryDecl parse_query() {
    AstQueryDecl d;
    d.name = expect_ident("query name");
    expect(Tok::Assign, "'='");
    std::string kind = expect_ident("query kind");
    expect(Tok::LParen, "'('");
    if (kind == "hypothesis" || kind == "estimate") {
      d.kind = kind == "hypothesis" ? QueryKind::Hypothesis : QueryKind::Estimate;
      d.rel = expect_ident("relation name");
    } else if (kind == "compare") {
      d.kind = QueryKind::Compare;
      d.rel = expect_ident("relation name");
      expect(Tok::Comma, "','");
      d.rel2 = expect_ident("relation name");
    } else if (kind == "expected") {
      d.kind = QueryKind::Expected;
      std::string mode = expect_ident("min or max");
      if (mode == "min")
        d.want_max = false;
      else if (mode == "max")
        d.want_max = true;
      else
        fail("expected min or max");
      expect(Tok::Comma, "','");
      d.observables.push_back(parse_observable());
    } else if (kind == "simulate") {
      d.kind = QueryKind::Simulate;
      double n = parse_number_or_const(false);
      if (std::floor(n) != n || n < 1) fail("simulate needs an integer run count");
      d.runs = static_cast<std::int64_t>(n);
      while (cur_.kind == Tok::Comma) {
        bump();
        d.observables.push_back(parse_observable());
      }
      if (d.observables.empty()) fail("simulate needs at least one observable");
    } else {
      fail("unknown query kind '" + kind + "'");
    }
    expect(Tok::RParen, "')'");
    return d;
  }

  // --- value expressions: || over && over ! over comparison over +- over */
  AstVExpr parse_or() {
    AstVExpr lhs = parse_and();
    while (cur_.kind == Tok::OrOr) {
      bump();
      AstVExpr rhs = parse_and();
      AstVExpr node;
      node.op = VOp::Or;
      node.kids = {std::move(lhs), std::move(rhs)};
      lhs = std::move(node);
    }
    return lhs;
  }

  AstVExpr parse_and() {
    AstVExpr lhs = parse_not();
    while (cur_.kind == Tok::AndAnd) {
      bump();
      AstVExpr rhs = parse_not();
      AstVExpr node;
      node.op = VOp::And;
      node.kids = {std::move(lhs), std::move(rhs)};
      lhs = std::move(node);
    }
    return lhs;
  }

  AstVExpr parse_not() {
    if (cur_.kind == Tok::Not) {
      bump();
      AstVExpr node;
      node.op = VOp::Not;
      node.kids = {parse_not()};
      return node;
    }
    return parse_comparison();
  }

  AstVExpr parse_comparison() {
    AstVExpr lhs = parse_additive();
    VOp op;
    switch (cur_.kind) {
      case Tok::EqEq: op = VOp::Eq; break;
      case Tok::NotEq: op = VOp::Ne; break;
      case Tok::Lt: op = VOp::Lt; break;
      case Tok::Le: op = VOp::Le; break;
      case Tok::Gt: op = VOp::Gt; break;
      case Tok::Ge: op = VOp::Ge; break;
      default: return lhs;
    }
    bump();
    AstVExpr rhs = parse_additive();
    AstVExpr node;
    node.op = op;
    node.kids = {std::move(lhs), std::move(rhs)};
    return node;
  }

  AstVExpr parse_additive() {
    AstVExpr lhs = parse_multiplicative();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      VOp op = cur_.kind == Tok::Plus ? VOp::Add : VOp::Sub;
      bump();
      AstVExpr rhs = parse_multiplicative();
      AstVExpr node;
      node.op = op;
      node.kids = {std::move(lhs), std::move(rhs)};
      lhs = std::move(node);
    }
    return lhs;
  }

  AstVExpr parse_multiplicative() {
    AstVExpr lhs = parse_unary();
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      VOp op = cur_.kind == Tok::Star ? VOp::Mul : VOp::Div;
      bump();
      AstVExpr rhs = parse_unary();
      AstVExpr node;
      node.op = op;
      node.kids = {std::move(lhs), std::move(rhs)};
      lhs = std::move(node);
    }
    return lhs;
  }

  AstVExpr parse_unary() {
    if (cur_.kind == Tok::Minus) {
      bump();
      AstVExpr node;
      node.op = VOp::Neg;
      node.kids = {parse_unary()};
      return node;
    }
    return parse_primary();
  }

  AstVExpr parse_primary() {
    AstVExpr node;
    if (cur_.kind == Tok::Number) {
      node.op = VOp::Const;
      node.lit = cur_.is_integer
                     ? Value::ofInt(static_cast<std::int64_t>(cur_.number))
                     : Value::ofReal(cur_.number);
      bump();
      return node;
    }
    if (cur_.kind == Tok::LParen) {
      bump();
      node = parse_or();
      expect(Tok::RParen, "')'");
      return node;
    }
    if (cur_.kind == Tok::Ident) {
      std::string name = cur_.text;
      if (name == "true" || name == "false") {
        bump();
        node.op = VOp::Const;
        node.lit = Value::ofBool(name == "true");
        return node;
      }
      if (name == "min" || name == "max" || name == "abs") {
        bump();
        expect(Tok::LParen, "'('");
        node.op = name == "min" ? VOp::Min : name == "max" ? VOp::Max : VOp::Abs;
        node.kids.push_back(parse_or());
        if (node.op != VOp::Abs) {
          expect(Tok::Comma, "','");
          node.kids.push_back(parse_or());
        }
        expect(Tok::RParen, "')'");
        return node;
      }
      bump();
      if (auto it = consts_.find(name); it != consts_.end()) {
        node.op = VOp::Const;
        double v = it->second;
        node.lit = (std::floor(v) == v && std::abs(v) < 9.0e15)
                       ? Value::ofInt(static_cast<std::int64_t>(v))
                       : Value::ofReal(v);
        return node;
      }
      node.op = VOp::Var;
      node.name = name;
      return node;
    }
    fail("expected an expression");
  }

  Lexer lexer_;
  Token cur_;
  std::vector<Diagnostic> diags_;
  std::map<std::string, double> consts_;
};

}  // namespace

ParseResult parse(std::string_view text) {
  Parser p(text);
  return p.run();
}

namespace {

void resolve_uses(SpecAst& ast, const std::filesystem::path& dir,
                  std::vector<std::string>& stack,
                  std::vector<Diagnostic>& diags);

std::optional<SpecAst> load_file(const std::filesystem::path& path,
                                 std::vector<std::string>& stack,
                                 std::vector<Diagnostic>& diags) {
  std::string canonical;
  std::error_code ec;
  auto abs = std::filesystem::weakly_canonical(path, ec);
  canonical = ec ? path.string() : abs.string();
  for (const std::string& seen : stack)
    if (seen == canonical) {
      diags.push_back(Diagnostic{Diagnostic::Category::Semantic, 0, 0,
                                 "include cycle through " + canonical});
      return std::nullopt;
    }
  std::ifstream in(path);
  if (!in) {
    diags.push_back(Diagnostic{Diagnostic::Category::Semantic, 0, 0,
                               "cannot open " + path.string()});
    return std::nullopt;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  ParseResult res = parse(buf.str());
  for (Diagnostic& d : res.diags) {
    d.message = path.string() + ": " + d.message;
    diags.push_back(d);
  }
  if (!res.ast) return std::nullopt;
  stack.push_back(canonical);
  resolve_uses(*res.ast, path.parent_path(), stack, diags);
  stack.pop_back();
  return res.ast;
}

void resolve_uses(SpecAst& ast, const std::filesystem::path& dir,
                  std::vector<std::string>& stack,
                  std::vector<Diagnostic>& diags) {
  SpecAst out;
  for (std::size_t i = 0; i < ast.decls.size(); ++i) {
    if (auto* use = std::get_if<AstUseDecl>(&ast.decls[i])) {
      auto included = load_file(dir / use->path, stack, diags);
      if (included) {
        for (std::size_t k = 0; k < included->decls.size(); ++k) {
          out.decls.push_back(std::move(included->decls[k]));
          out.locs.push_back(included->locs[k]);
        }
      }
      continue;
    }
    out.decls.push_back(std::move(ast.decls[i]));
    out.locs.push_back(ast.locs[i]);
  }
  ast = std::move(out);
}

}  // namespace

ParseResult parse_file(const std::string& path) {
  ParseResult result;
  std::vector<std::string> stack;
  auto ast = load_file(path, stack, result.diags);
  if (ast && result.diags.empty()) result.ast = std::move(*ast);
  return result;
}

}  // namespace pccsl::dsl
