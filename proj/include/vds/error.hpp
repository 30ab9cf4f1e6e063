#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vds {

/// Base of every error raised by the virtual data system. `kind()` is the
/// stable error name (e.g. "ConflictingProducer") surfaced by the CLI.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define VDS_DEFINE_ERROR(Name)                                                \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& message) : Error(#Name, message) {} \
    }

// vdl
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t line, std::size_t column, const std::string& message)
        : Error("SyntaxError", std::to_string(line) + ":" + std::to_string(column) + ": " + message),
          line_(line), column_(column), detail_(message) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string detail_;
};

VDS_DEFINE_ERROR(DuplicateFormal);
VDS_DEFINE_ERROR(MissingActual);
VDS_DEFINE_ERROR(UnknownActual);
VDS_DEFINE_ERROR(ClassMismatch);

// catalog
VDS_DEFINE_ERROR(DuplicateName);
VDS_DEFINE_ERROR(UnknownTransformation);
VDS_DEFINE_ERROR(IoError);

class ConflictingProducer : public Error {
public:
    ConflictingProducer(std::string lfn, std::string existing, std::string incoming)
        : Error("ConflictingProducer", lfn + " is produced by both " + existing + " and " + incoming),
          lfn_(std::move(lfn)), existing_(std::move(existing)), incoming_(std::move(incoming)) {}

    const std::string& lfn() const noexcept { return lfn_; }
    const std::string& existing() const noexcept { return existing_; }
    const std::string& incoming() const noexcept { return incoming_; }

private:
    std::string lfn_, existing_, incoming_;
};

class FormatError : public Error {
public:
    FormatError(std::size_t line, const std::string& message)
        : Error("FormatError", "line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// planning
VDS_DEFINE_ERROR(UnknownTarget);
VDS_DEFINE_ERROR(UnsatisfiableInput);
VDS_DEFINE_ERROR(MissingReplica);
VDS_DEFINE_ERROR(UnknownSite);

class CycleDetected : public Error {
public:
    explicit CycleDetected(std::vector<std::string> path)
        : Error("CycleDetected", join(path)), path_(std::move(path)) {}
    const std::vector<std::string>& path() const noexcept { return path_; }

private:
    static std::string join(const std::vector<std::string>& path) {
        std::string out;
        for (const auto& p : path) {
            if (!out.empty()) out += " -> ";
            out += p;
        }
        return out;
    }
    std::vector<std::string> path_;
};

// production
VDS_DEFINE_ERROR(UnknownProject);
VDS_DEFINE_ERROR(InvalidRequest);

class LogFormatError : public Error {
public:
    LogFormatError(std::size_t line, const std::string& message)
        : Error("LogFormatError", "line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// scheduling and simulation
VDS_DEFINE_ERROR(DuplicateTarget);
VDS_DEFINE_ERROR(UnknownJob);
VDS_DEFINE_ERROR(ConcretizationFailed);
VDS_DEFINE_ERROR(ConfigError);

#undef VDS_DEFINE_ERROR

}  // namespace vds
