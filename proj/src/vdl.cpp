#include "vds/vdl.hpp"

#include <algorithm>
#include <cctype>

#include "vds/error.hpp"

namespace vds {

std::string_view to_string(ArgClass cls) {
    switch (cls) {
        case ArgClass::Input: return "input";
        case ArgClass::Output: return "output";
        case ArgClass::None: return "none";
    }
    return "none";
}

std::optional<ArgClass> parse_arg_class(std::string_view text) {
    if (text == "input") return ArgClass::Input;
    if (text == "output") return ArgClass::Output;
    if (text == "none") return ArgClass::None;
    return std::nullopt;
}

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

bool is_identifier(std::string_view text) {
    if (text.empty() || !ident_start(text.front())) return false;
    return std::all_of(text.begin(), text.end(), ident_char);
}

bool is_logical_file_name(std::string_view text) {
    return !text.empty() && std::none_of(text.begin(), text.end(), is_space);
}

const FormalArg* Transformation::find_formal(std::string_view formal) const {
    auto it = std::find_if(formals.begin(), formals.end(),
                           [&](const FormalArg& f) { return f.name == formal; });
    return it == formals.end() ? nullptr : &*it;
}

std::set<std::string> Derivation::declared_outputs() const {
    std::set<std::string> out;
    for (const auto& [formal, value] : actuals) {
        if (const auto* ref = std::get_if<FileRef>(&value); ref && ref->cls == ArgClass::Output) {
            out.insert(ref->lfn);
        }
    }
    return out;
}

const std::string& object_name(const VdlObject& object) {
    return std::visit([](const auto& o) -> const std::string& { return o.name; }, object);
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok {
    Ident, String, LParen, RParen, LBrace, RBrace, Comma, Semi, Equals,
    Arrow, DollarBrace, AtBrace, Colon, End
};

std::string_view describe(Tok t) {
    switch (t) {
        case Tok::Ident: return "identifier";
        case Tok::String: return "string";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::Comma: return "','";
        case Tok::Semi: return "';'";
        case Tok::Equals: return "'='";
        case Tok::Arrow: return "'->'";
        case Tok::DollarBrace: return "'${'";
        case Tok::AtBrace: return "'@{'";
        case Tok::Colon: return "':'";
        case Tok::End: return "end of input";
    }
    return "token";
}

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::size_t line = 1;
    std::size_t column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        skip_blank();
        Token tok;
        tok.line = line_;
        tok.column = column_;
        if (pos_ >= src_.size()) return tok;

        const char c = src_[pos_];
        if (ident_start(c)) {
            std::size_t end = pos_;
            while (end < src_.size() && ident_char(src_[end])) ++end;
            tok.kind = Tok::Ident;
            tok.text = std::string(src_.substr(pos_, end - pos_));
            advance(end - pos_);
            return tok;
        }
        if (c == '"') {
            tok.kind = Tok::String;
            tok.text = read_string(tok);
            return tok;
        }
        auto single = [&](Tok kind) {
            tok.kind = kind;
            advance(1);
            return tok;
        };
        auto pair = [&](char second, Tok kind) {
            if (pos_ + 1 < src_.size() && src_[pos_ + 1] == second) {
                tok.kind = kind;
                advance(2);
                return tok;
            }
            throw SyntaxError(line_, column_, std::string("unexpected character '") + c + "'");
        };
        switch (c) {
            case '(': return single(Tok::LParen);
            case ')': return single(Tok::RParen);
            case '{': return single(Tok::LBrace);
            case '}': return single(Tok::RBrace);
            case ',': return single(Tok::Comma);
            case ';': return single(Tok::Semi);
            case '=': return single(Tok::Equals);
            case ':': return single(Tok::Colon);
            case '-': return pair('>', Tok::Arrow);
            case '$': return pair('{', Tok::DollarBrace);
            case '@': return pair('{', Tok::AtBrace);
            default: break;
        }
        if (std::isprint(static_cast<unsigned char>(c))) {
            throw SyntaxError(line_, column_, std::string("unexpected character '") + c + "'");
        }
        throw SyntaxError(line_, column_, "unexpected byte " + std::to_string(static_cast<unsigned char>(c)));
    }

private:
    void advance(std::size_t n) {
        for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i, ++pos_) {
            if (src_[pos_] == '\n') {
                ++line_;
                column_ = 1;
            } else {
                ++column_;
            }
        }
    }

    void skip_blank() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (is_space(c)) {
                advance(1);
            } else if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance(1);
            } else {
                break;
            }
        }
    }

    std::string read_string(const Token& start) {
        advance(1);  // opening quote
        std::string out;
        while (true) {
            if (pos_ >= src_.size()) {
                throw SyntaxError(start.line, start.column, "unterminated string");
            }
            const char c = src_[pos_];
            if (c == '"') {
                advance(1);
                return out;
            }
            if (c == '\\') {
                if (pos_ + 1 >= src_.size()) {
                    throw SyntaxError(start.line, start.column, "unterminated string");
                }
                const char esc = src_[pos_ + 1];
                if (esc != '"' && esc != '\\') {
                    throw SyntaxError(line_, column_, std::string("unknown escape '\\") + esc + "'");
                }
                out.push_back(esc);
                advance(2);
                continue;
            }
            out.push_back(c);
            advance(1);
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t column_ = 1;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    explicit Parser(std::string_view text) : lexer_(text) { tok_ = lexer_.next(); }

    std::vector<SourceObject> parse_file() {
        std::vector<SourceObject> out;
        while (tok_.kind != Tok::End) {
            if (tok_.kind == Tok::Ident && tok_.text == "TR") {
                const std::size_t line = tok_.line;
                out.push_back({parse_tr(), line});
            } else if (tok_.kind == Tok::Ident && tok_.text == "DV") {
                const std::size_t line = tok_.line;
                out.push_back({parse_dv(), line});
            } else {
                fail("expected TR or DV");
            }
        }
        return out;
    }

private:
    [[noreturn]] void fail(const std::string& message) const {
        throw SyntaxError(tok_.line, tok_.column, message);
    }

    void bump() { tok_ = lexer_.next(); }

    Token expect(Tok kind) {
        if (tok_.kind != kind) {
            fail("expected " + std::string(describe(kind)) + ", found " + found());
        }
        Token t = tok_;
        bump();
        return t;
    }

    std::string found() const {
        if (tok_.kind == Tok::Ident) return "'" + tok_.text + "'";
        return std::string(describe(tok_.kind));
    }

    void expect_keyword(std::string_view word) {
        if (tok_.kind != Tok::Ident || tok_.text != word) {
            fail("expected '" + std::string(word) + "', found " + found());
        }
        bump();
    }

    ArgClass expect_class() {
        if (tok_.kind == Tok::Ident) {
            if (auto cls = parse_arg_class(tok_.text)) {
                bump();
                return *cls;
            }
        }
        fail("expected argument class (input, output or none), found " + found());
    }

    Transformation parse_tr() {
        bump();  // TR
        Transformation tr;
        tr.name = expect(Tok::Ident).text;
        expect(Tok::LParen);
        while (true) {
            FormalArg formal;
            formal.cls = expect_class();
            const Token name = expect(Tok::Ident);
            formal.name = name.text;
            if (tr.find_formal(formal.name)) {
                throw DuplicateFormal("formal '" + formal.name + "' repeated in TR " + tr.name + " at " +
                                      std::to_string(name.line) + ":" + std::to_string(name.column));
            }
            tr.formals.push_back(std::move(formal));
            if (tok_.kind == Tok::Comma) {
                bump();
                continue;
            }
            break;
        }
        expect(Tok::RParen);
        expect(Tok::LBrace);
        while (tok_.kind != Tok::RBrace) {
            const Token at = tok_;
            expect_keyword("argument");
            expect(Tok::Equals);
            expect(Tok::DollarBrace);
            TemplateRef ref;
            ref.cls = expect_class();
            expect(Tok::Colon);
            ref.name = expect(Tok::Ident).text;
            expect(Tok::RBrace);
            expect(Tok::Semi);
            const FormalArg* formal = tr.find_formal(ref.name);
            if (!formal) {
                throw SyntaxError(at.line, at.column, "argument refers to undeclared formal '" + ref.name + "'");
            }
            if (formal->cls != ref.cls) {
                throw SyntaxError(at.line, at.column,
                                  "argument class " + std::string(to_string(ref.cls)) + " does not match formal '" +
                                      ref.name + "' of class " + std::string(to_string(formal->cls)));
            }
            tr.argument_template.push_back(std::move(ref));
        }
        expect(Tok::RBrace);
        return tr;
    }

    Derivation parse_dv() {
        bump();  // DV
        Derivation dv;
        dv.name = expect(Tok::Ident).text;
        expect(Tok::Arrow);
        dv.transformation_name = expect(Tok::Ident).text;
        expect(Tok::LParen);
        while (true) {
            const Token name = expect(Tok::Ident);
            expect(Tok::Equals);
            ActualValue value;
            if (tok_.kind == Tok::String) {
                value = Literal{tok_.text};
                bump();
            } else if (tok_.kind == Tok::AtBrace) {
                const Token at = tok_;
                bump();
                FileRef ref;
                ref.cls = expect_class();
                if (ref.cls == ArgClass::None) {
                    throw SyntaxError(at.line, at.column, "file reference cannot have class none");
                }
                expect(Tok::Colon);
                const Token lfn = expect(Tok::String);
                if (!is_logical_file_name(lfn.text)) {
                    throw SyntaxError(lfn.line, lfn.column, "logical file name must be nonempty without whitespace");
                }
                ref.lfn = lfn.text;
                expect(Tok::RBrace);
                value = std::move(ref);
            } else {
                fail("expected string or '@{', found " + found());
            }
            if (!dv.actuals.emplace(name.text, std::move(value)).second) {
                throw SyntaxError(name.line, name.column, "actual '" + name.text + "' given twice");
            }
            if (tok_.kind == Tok::Comma) {
                bump();
                continue;
            }
            break;
        }
        expect(Tok::RParen);
        expect(Tok::Semi);
        return dv;
    }

    Lexer lexer_;
    Token tok_;
};

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void serialize_into(std::string& out, const Transformation& tr) {
    out += "TR " + tr.name + "(";
    for (std::size_t i = 0; i < tr.formals.size(); ++i) {
        out += i == 0 ? " " : ", ";
        out += std::string(to_string(tr.formals[i].cls)) + " " + tr.formals[i].name;
    }
    out += " )\n{\n";
    for (const auto& ref : tr.argument_template) {
        out += "  argument = ${" + std::string(to_string(ref.cls)) + ":" + ref.name + "};\n";
    }
    out += "}\n";
}

void serialize_into(std::string& out, const Derivation& dv) {
    out += "DV " + dv.name + "->" + dv.transformation_name + "(";
    bool first = true;
    for (const auto& [formal, value] : dv.actuals) {
        out += first ? "\n  " : ",\n  ";
        first = false;
        out += formal + "=";
        if (const auto* lit = std::get_if<Literal>(&value)) {
            out += quote(lit->value);
        } else {
            const auto& ref = std::get<FileRef>(value);
            out += "@{" + std::string(to_string(ref.cls)) + ":" + quote(ref.lfn) + "}";
        }
    }
    out += " );\n";
}

}  // namespace

std::vector<SourceObject> parse_vdl_with_lines(std::string_view text) {
    return Parser(text).parse_file();
}

std::vector<VdlObject> parse_vdl(std::string_view text) {
    std::vector<VdlObject> out;
    for (auto& s : parse_vdl_with_lines(text)) out.push_back(std::move(s.object));
    return out;
}

std::string serialize_vdl(const VdlObject& object) {
    std::string out;
    std::visit([&](const auto& o) { serialize_into(out, o); }, object);
    return out;
}

std::string serialize_vdl(const std::vector<VdlObject>& objects) {
    std::string out;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        if (i) out += "\n";
        out += serialize_vdl(objects[i]);
    }
    return out;
}

Binding bind_derivation(const Derivation& dv, const Transformation& tr) {
    Binding b;
    for (const auto& formal : tr.formals) {
        auto it = dv.actuals.find(formal.name);
        if (it == dv.actuals.end()) {
            throw MissingActual("DV " + dv.name + " does not bind formal '" + formal.name + "' of TR " + tr.name);
        }
        const ActualValue& value = it->second;
        if (formal.cls == ArgClass::None) {
            const auto* lit = std::get_if<Literal>(&value);
            if (!lit) {
                throw ClassMismatch("DV " + dv.name + " passes a file to parameter '" + formal.name + "'");
            }
            b.params.emplace(formal.name, lit->value);
        } else {
            const auto* ref = std::get_if<FileRef>(&value);
            if (!ref) {
                throw ClassMismatch("DV " + dv.name + " passes a literal to " + std::string(to_string(formal.cls)) +
                                    " formal '" + formal.name + "'");
            }
            if (ref->cls != formal.cls) {
                throw ClassMismatch("DV " + dv.name + " passes @{" + std::string(to_string(ref->cls)) + ":...} to " +
                                    std::string(to_string(formal.cls)) + " formal '" + formal.name + "'");
            }
            (formal.cls == ArgClass::Input ? b.inputs : b.outputs).insert(ref->lfn);
        }
        b.by_formal.emplace(formal.name, value);
    }
    for (const auto& [name, value] : dv.actuals) {
        if (!tr.find_formal(name)) {
            throw UnknownActual("DV " + dv.name + " binds '" + name + "', which TR " + tr.name + " does not declare");
        }
    }
    return b;
}

}  // namespace vds
