#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "pbcplus/error.hpp"

namespace pbcplus::pbc {

enum class Tok {
  Name,
  Int,
  Number,
  LBrace,
  RBrace,
  LParen,
  RParen,
  Comma,
  Dot,
  Colon,
  Eq,
  Neq,
  Amp,
  Bar,
  Tilde,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

/// Splits pBC+ description or query text into tokens. `%` starts a
/// comment that runs to the end of the line.
inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  std::size_t line = 1;
  std::size_t col = 1;
  auto advance = [&] {
    if (src[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++i;
  };
  auto ident = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    if (c == '%') {
      while (i < src.size() && src[i] != '\n') advance();
      continue;
    }
    const std::size_t l = line;
    const std::size_t k = col;
    const std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() && ident(src[i])) advance();
      out.push_back({Tok::Name, std::string(src.substr(start, i - start)), l, k});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      bool real = false;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance();
      if (i + 1 < src.size() && src[i] == '.' && std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
        real = true;
        advance();
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance();
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
          real = true;
          while (i < j) advance();
          while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance();
        }
      }
      out.push_back({real ? Tok::Number : Tok::Int, std::string(src.substr(start, i - start)), l, k});
      continue;
    }
    Tok t;
    switch (c) {
      case '{':
        t = Tok::LBrace;
        break;
      case '}':
        t = Tok::RBrace;
        break;
      case '(':
        t = Tok::LParen;
        break;
      case ')':
        t = Tok::RParen;
        break;
      case ',':
        t = Tok::Comma;
        break;
      case '.':
        t = Tok::Dot;
        break;
      case ':':
        t = Tok::Colon;
        break;
      case '=':
        t = Tok::Eq;
        break;
      case '&':
        t = Tok::Amp;
        break;
      case '|':
        t = Tok::Bar;
        break;
      case '~':
        t = Tok::Tilde;
        break;
      case '!':
        if (i + 1 < src.size() && src[i + 1] == '=') {
          advance();
          advance();
          out.push_back({Tok::Neq, "!=", l, k});
          continue;
        }
        [[fallthrough]];
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", l, k);
    }
    advance();
    out.push_back({t, std::string(1, c), l, k});
  }
  out.push_back({Tok::End, "", line, col});
  return out;
}

}  // namespace pbcplus::pbc
