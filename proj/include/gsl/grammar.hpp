#pragma once
// Task description grammar:
//
//   task      := step ('then' step)*
//   step      := skill '(' category attrs? (',' qualifier)? ')'
//   attrs     := '[' key '=' value (',' key '=' value)* ']'
//   key       := 'color' | 'size'
//   qualifier := 'leftmost' | 'rightmost' | 'nearest' | 'farthest'
//
// Identifiers are [a-z_][a-z0-9_]*.  parse_task and unparse_plan round-trip:
// parse(unparse(plan)) == plan for every valid plan.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gsl/error.hpp"

namespace gsl {

// The fixed skill vocabulary; enum values are the embedding indices.
enum class SkillLabel : int {
  press = 0,
  pick = 1,
  place = 2,
  screw = 3,
  lift = 4,
  pull_out = 5,
  push_back = 6,
  open = 7,
  close = 8,
};

inline constexpr int kSkillCount = 9;

inline const char* to_string(SkillLabel k) {
  switch (k) {
    case SkillLabel::press: return "press";
    case SkillLabel::pick: return "pick";
    case SkillLabel::place: return "place";
    case SkillLabel::screw: return "screw";
    case SkillLabel::lift: return "lift";
    case SkillLabel::pull_out: return "pull_out";
    case SkillLabel::push_back: return "push_back";
    case SkillLabel::open: return "open";
    case SkillLabel::close: return "close";
  }
  return "?";
}

inline std::optional<SkillLabel> skill_from_string(const std::string& s) {
  for (int i = 0; i < kSkillCount; ++i) {
    SkillLabel k = static_cast<SkillLabel>(i);
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

enum class Qualifier { none, leftmost, rightmost, nearest, farthest };

inline const char* to_string(Qualifier q) {
  switch (q) {
    case Qualifier::none: return "none";
    case Qualifier::leftmost: return "leftmost";
    case Qualifier::rightmost: return "rightmost";
    case Qualifier::nearest: return "nearest";
    case Qualifier::farthest: return "farthest";
  }
  return "?";
}

inline std::optional<Qualifier> qualifier_from_string(const std::string& s) {
  for (Qualifier q : {Qualifier::leftmost, Qualifier::rightmost, Qualifier::nearest,
                      Qualifier::farthest})
    if (s == to_string(q)) return q;
  return std::nullopt;
}

struct ObjectQuery {
  std::string category;
  std::vector<std::pair<std::string, std::string>> attributes;  // (key, value)
  Qualifier qualifier = Qualifier::none;

  bool operator==(const ObjectQuery&) const = default;
};

struct PlanStep {
  SkillLabel label = SkillLabel::press;
  ObjectQuery query;

  bool operator==(const PlanStep&) const = default;
};

struct SkillPlan {
  std::vector<PlanStep> steps;

  bool operator==(const SkillPlan&) const = default;
};

// Reports the byte offset of the offending token and what was expected there.
struct ParseError : Error {
  std::size_t position;
  std::vector<std::string> expected;

  ParseError(std::size_t pos, std::vector<std::string> expected_, const std::string& found)
      : Error(build(pos, expected_, found)), position(pos), expected(std::move(expected_)) {}

  static std::string build(std::size_t pos, const std::vector<std::string>& exp,
                           const std::string& found) {
    std::string msg = "parse error at position " + std::to_string(pos) + ": expected ";
    for (std::size_t i = 0; i < exp.size(); ++i) {
      if (i > 0) msg += exp.size() == 2 ? " or " : (i + 1 == exp.size() ? ", or " : ", ");
      msg += exp[i];
    }
    msg += found.empty() ? ", found end of input" : ", found '" + found + "'";
    return msg;
  }
};

namespace detail {

struct Token {
  enum class Kind { ident, lparen, rparen, lbracket, rbracket, comma, equals, end };
  Kind kind = Kind::end;
  std::string text;
  std::size_t position = 0;
};

inline std::vector<Token> tokenize(const std::string& input) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < input.size()) {
    char c = input[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    Token t;
    t.position = i;
    switch (c) {
      case '(': t.kind = Token::Kind::lparen; t.text = "("; ++i; break;
      case ')': t.kind = Token::Kind::rparen; t.text = ")"; ++i; break;
      case '[': t.kind = Token::Kind::lbracket; t.text = "["; ++i; break;
      case ']': t.kind = Token::Kind::rbracket; t.text = "]"; ++i; break;
      case ',': t.kind = Token::Kind::comma; t.text = ","; ++i; break;
      case '=': t.kind = Token::Kind::equals; t.text = "="; ++i; break;
      default: {
        if ((c >= 'a' && c <= 'z') || c == '_') {
          std::size_t j = i;
          while (j < input.size() &&
                 ((input[j] >= 'a' && input[j] <= 'z') ||
                  (input[j] >= '0' && input[j] <= '9') || input[j] == '_'))
            ++j;
          t.kind = Token::Kind::ident;
          t.text = input.substr(i, j - i);
          i = j;
        } else {
          throw ParseError(i, {"identifier", "punctuation"}, std::string(1, c));
        }
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.position = input.size();
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(const std::string& input) : tokens_(tokenize(input)) {}

  SkillPlan parse() {
    SkillPlan plan;
    plan.steps.push_back(parse_step());
    while (peek().kind == Token::Kind::ident && peek().text == "then") {
      ++pos_;
      plan.steps.push_back(parse_step());
    }
    if (peek().kind != Token::Kind::end)
      fail({"'then'", "end of input"});
    return plan;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw ParseError(peek().position, std::move(expected), peek().text);
  }

  Token expect(Token::Kind kind, const char* what) {
    if (peek().kind != kind) fail({what});
    return tokens_[pos_++];
  }

  PlanStep parse_step() {
    PlanStep step;
    if (peek().kind != Token::Kind::ident || !skill_from_string(peek().text)) {
      std::vector<std::string> names;
      for (int i = 0; i < kSkillCount; ++i)
        names.push_back(std::string("'") + to_string(static_cast<SkillLabel>(i)) + "'");
      fail(std::move(names));
    }
    step.label = *skill_from_string(tokens_[pos_++].text);
    expect(Token::Kind::lparen, "'('");
    step.query.category = expect(Token::Kind::ident, "category name").text;
    if (peek().kind == Token::Kind::lbracket) {
      ++pos_;
      for (;;) {
        if (peek().kind != Token::Kind::ident ||
            (peek().text != "color" && peek().text != "size"))
          fail({"'color'", "'size'"});
        std::string key = tokens_[pos_++].text;
        expect(Token::Kind::equals, "'='");
        std::string value = expect(Token::Kind::ident, "attribute value").text;
        step.query.attributes.emplace_back(key, value);
        if (peek().kind == Token::Kind::comma) {
          ++pos_;
          continue;
        }
        expect(Token::Kind::rbracket, "']'");
        break;
      }
    }
    if (peek().kind == Token::Kind::comma) {
      ++pos_;
      if (peek().kind != Token::Kind::ident || !qualifier_from_string(peek().text))
        fail({"'leftmost'", "'rightmost'", "'nearest'", "'farthest'"});
      step.query.qualifier = *qualifier_from_string(tokens_[pos_++].text);
    }
    if (peek().kind != Token::Kind::rparen) {
      // Tailor the expected set to what could legally continue the step.
      std::vector<std::string> exp;
      if (step.query.attributes.empty() && step.query.qualifier == Qualifier::none)
        exp.push_back("'['");
      if (step.query.qualifier == Qualifier::none) exp.push_back("','");
      exp.push_back("')'");
      fail(std::move(exp));
    }
    ++pos_;
    return step;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline SkillPlan parse_task(const std::string& description) {
  return detail::Parser(description).parse();
}

// Canonical text form; parse_task(unparse_plan(p)) == p.
inline std::string unparse_plan(const SkillPlan& plan) {
  std::string out;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    if (i > 0) out += " then ";
    const PlanStep& s = plan.steps[i];
    out += to_string(s.label);
    out += '(';
    out += s.query.category;
    if (!s.query.attributes.empty()) {
      out += '[';
      for (std::size_t a = 0; a < s.query.attributes.size(); ++a) {
        if (a > 0) out += ',';
        out += s.query.attributes[a].first;
        out += '=';
        out += s.query.attributes[a].second;
      }
      out += ']';
    }
    if (s.query.qualifier != Qualifier::none) {
      out += ',';
      out += to_string(s.query.qualifier);
    }
    out += ')';
  }
  return out;
}

}  // namespace gsl
