#pragma once

// Minimal DOT grammar checker for directed graphs, independent of the code
// that emits the files. Accepts the subset
//
//   digraph NAME { stmt* }
//   stmt := ID '=' value ';'                 (graph attribute)
//         | ID attr_list? ';'                (node)
//         | ID '->' ID attr_list? ';'        (edge)
//   attr_list := '[' ID '=' value (',' ID '=' value)* ']'
//   value := ID | quoted string
//
// and rejects anything else (unbalanced quotes or brackets, undirected
// edges, missing semicolons, subgraphs).

#include <cctype>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dotcheck {

struct DotGraph {
    std::string name;
    std::vector<std::string> nodes;  // explicitly declared node ids, in order
    std::vector<std::pair<std::string, std::string>> edges;
};

namespace detail {

struct Token {
    enum Kind { ID, PUNCT, ARROW, END } kind = END;
    std::string text;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    Token next() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        if (pos_ >= text_.size()) {
            return {Token::END, ""};
        }
        char c = text_[pos_];
        if (c == '"') {
            std::string out;
            ++pos_;
            while (pos_ < text_.size() && text_[pos_] != '"') {
                if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
                    ++pos_;
                }
                out += text_[pos_++];
            }
            if (pos_ >= text_.size()) {
                throw std::runtime_error("dot: unterminated quoted string");
            }
            ++pos_;
            return {Token::ID, out};
        }
        if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
            pos_ += 2;
            return {Token::ARROW, "->"};
        }
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-' ||
            c == '+') {
            std::string out;
            while (pos_ < text_.size()) {
                char d = text_[pos_];
                if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '.' ||
                    d == '-' || d == '+') {
                    if (d == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
                        break;
                    }
                    out += d;
                    ++pos_;
                } else {
                    break;
                }
            }
            return {Token::ID, out};
        }
        if (c == '{' || c == '}' || c == '[' || c == ']' || c == '=' || c == ';' || c == ',') {
            ++pos_;
            return {Token::PUNCT, std::string(1, c)};
        }
        throw std::runtime_error(std::string("dot: unexpected character '") + c + "'");
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0;
};

inline void expect_punct(const Token& t, const char* p) {
    if (t.kind != Token::PUNCT || t.text != p) {
        throw std::runtime_error(std::string("dot: expected '") + p + "', got '" + t.text + "'");
    }
}

}  // namespace detail

// Parses the text, throwing std::runtime_error on any grammar violation.
inline DotGraph parse_dot(const std::string& text) {
    using detail::Token;
    detail::Lexer lex(text);
    DotGraph g;

    Token t = lex.next();
    if (t.kind != Token::ID || t.text != "digraph") {
        throw std::runtime_error("dot: document must start with 'digraph'");
    }
    t = lex.next();
    if (t.kind == Token::ID) {
        g.name = t.text;
        t = lex.next();
    }
    detail::expect_punct(t, "{");

    auto parse_attr_list = [&](Token& cur) {
        // cur is '['; consumes through the matching ']' and loads the next token
        for (;;) {
            cur = lex.next();
            if (cur.kind == Token::PUNCT && cur.text == "]") {
                break;
            }
            if (cur.kind != Token::ID) {
                throw std::runtime_error("dot: expected attribute name");
            }
            cur = lex.next();
            detail::expect_punct(cur, "=");
            cur = lex.next();
            if (cur.kind != Token::ID) {
                throw std::runtime_error("dot: expected attribute value");
            }
            cur = lex.next();
            if (cur.kind == Token::PUNCT && cur.text == "]") {
                break;
            }
            if (!(cur.kind == Token::PUNCT && cur.text == ",")) {
                throw std::runtime_error("dot: expected ',' or ']' in attribute list");
            }
        }
        cur = lex.next();
    };

    for (;;) {
        t = lex.next();
        if (t.kind == Token::PUNCT && t.text == "}") {
            break;
        }
        if (t.kind != Token::ID) {
            throw std::runtime_error("dot: expected statement, got '" + t.text + "'");
        }
        std::string first = t.text;
        t = lex.next();
        if (t.kind == Token::PUNCT && t.text == "=") {
            t = lex.next();
            if (t.kind != Token::ID) {
                throw std::runtime_error("dot: expected value after '='");
            }
            t = lex.next();
            detail::expect_punct(t, ";");
            continue;
        }
        if (t.kind == Token::ARROW) {
            t = lex.next();
            if (t.kind != Token::ID) {
                throw std::runtime_error("dot: expected edge target after '->'");
            }
            std::string second = t.text;
            t = lex.next();
            if (t.kind == Token::PUNCT && t.text == "[") {
                parse_attr_list(t);
            }
            detail::expect_punct(t, ";");
            g.edges.emplace_back(first, second);
            continue;
        }
        if (t.kind == Token::PUNCT && t.text == "[") {
            parse_attr_list(t);
            detail::expect_punct(t, ";");
            g.nodes.push_back(first);
            continue;
        }
        detail::expect_punct(t, ";");
        g.nodes.push_back(first);
    }
    t = lex.next();
    if (t.kind != Token::END) {
        throw std::runtime_error("dot: trailing content after closing '}'");
    }
    return g;
}

}  // namespace dotcheck
