#pragma once

// Virtual Data Language: transformations (TR) and derivations (DV).
//
//   TR FORTRAN_SECTION( none runnum, output outfile, input kincard )
//   {
//     argument = ${none:runnum};
//     argument = ${input:kincard};
//     argument = ${output:outfile};
//   }
//   DV RUN_1->FORTRAN_SECTION( runnum="1", kincard=@{input:"card.txt"},
//                              outfile=@{output:"run_1.fz"} );
//
// Parsing is context free: a DV can be parsed before its TR is known and is
// checked against it later by bind_derivation().

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vds {

enum class ArgClass { Input, Output, None };

std::string_view to_string(ArgClass cls);
std::optional<ArgClass> parse_arg_class(std::string_view text);

bool is_identifier(std::string_view text);
/// Logical file names are nonempty and contain no whitespace.
bool is_logical_file_name(std::string_view text);

struct FormalArg {
    std::string name;
    ArgClass cls = ArgClass::None;

    friend bool operator==(const FormalArg&, const FormalArg&) = default;
};

/// One `argument = ${class:name};` line of a transformation body.
struct TemplateRef {
    ArgClass cls = ArgClass::None;
    std::string name;

    friend bool operator==(const TemplateRef&, const TemplateRef&) = default;
};

struct Transformation {
    std::string name;
    std::vector<FormalArg> formals;
    std::vector<TemplateRef> argument_template;

    const FormalArg* find_formal(std::string_view formal) const;

    friend bool operator==(const Transformation&, const Transformation&) = default;
};

struct Literal {
    std::string value;
    friend bool operator==(const Literal&, const Literal&) = default;
};

/// `@{input:"lfn"}` or `@{output:"lfn"}`. Never class none.
struct FileRef {
    ArgClass cls = ArgClass::Input;
    std::string lfn;
    friend bool operator==(const FileRef&, const FileRef&) = default;
};

using ActualValue = std::variant<Literal, FileRef>;

struct Derivation {
    std::string name;
    std::string transformation_name;
    /// Keyed by formal name; actuals are order-insensitive.
    std::map<std::string, ActualValue> actuals;

    /// Output LFNs taken from the actuals alone (no transformation needed).
    std::set<std::string> declared_outputs() const;

    friend bool operator==(const Derivation&, const Derivation&) = default;
};

using VdlObject = std::variant<Transformation, Derivation>;

const std::string& object_name(const VdlObject& object);

/// A parsed object together with the line its declaration starts on.
struct SourceObject {
    VdlObject object;
    std::size_t line = 0;
};

/// Throws SyntaxError (positioned) or DuplicateFormal.
std::vector<VdlObject> parse_vdl(std::string_view text);
std::vector<SourceObject> parse_vdl_with_lines(std::string_view text);

std::string serialize_vdl(const std::vector<VdlObject>& objects);
std::string serialize_vdl(const VdlObject& object);

/// A derivation resolved against its transformation.
struct Binding {
    std::map<std::string, ActualValue> by_formal;
    std::set<std::string> inputs;
    std::set<std::string> outputs;
    std::map<std::string, std::string> params;

    friend bool operator==(const Binding&, const Binding&) = default;
};

/// Throws MissingActual, UnknownActual or ClassMismatch. The caller must pass
/// the transformation the derivation names.
Binding bind_derivation(const Derivation& dv, const Transformation& tr);

}  // namespace vds
