#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "vds/vdl.hpp"

namespace vds {

/// The virtual data catalog: transformations, derivations, and the index of
/// which derivation produces each logical file.
///
/// A value type. const member functions may be called concurrently; mutation
/// needs exclusive access.
class VirtualDataCatalog {
public:
    /// Idempotent for identical objects. Throws DuplicateName when the name is
    /// taken by different content, ConflictingProducer when an output LFN
    /// already has a producer. Derivations are not bound here, so a DV may
    /// arrive before its TR.
    void insert(const VdlObject& object);

    const Transformation* find_transformation(std::string_view name) const;
    const Derivation* find_derivation(std::string_view name) const;

    /// nullptr for external files (nothing in the catalog produces them).
    const Derivation* find_producer(std::string_view lfn) const;

    /// Binds a stored derivation. Throws UnknownTarget for an unknown DV name,
    /// UnknownTransformation when its TR is absent, or the binding errors.
    Binding bind(std::string_view dv_name) const;

    const std::map<std::string, Transformation, std::less<>>& transformations() const { return transformations_; }
    const std::map<std::string, Derivation, std::less<>>& derivations() const { return derivations_; }
    const std::map<std::string, std::string, std::less<>>& producer_index() const { return producer_index_; }

    bool empty() const { return transformations_.empty() && derivations_.empty(); }
    std::size_t size() const { return transformations_.size() + derivations_.size(); }

    /// Transformations first, then derivations, each sorted by name.
    std::vector<VdlObject> objects() const;

    friend bool operator==(const VirtualDataCatalog&, const VirtualDataCatalog&) = default;

private:
    std::map<std::string, Transformation, std::less<>> transformations_;
    std::map<std::string, Derivation, std::less<>> derivations_;
    std::map<std::string, std::string, std::less<>> producer_index_;
};

inline constexpr std::string_view kCatalogFormatHeader = "# vdc-format 1";

std::string save_catalog_text(const VirtualDataCatalog& catalog);
/// Throws FormatError(line) on a bad header, syntax errors or conflicts.
VirtualDataCatalog load_catalog_text(std::string_view text);

/// Throws IoError when the file cannot be written or read.
void save_catalog(const VirtualDataCatalog& catalog, const std::filesystem::path& path);
VirtualDataCatalog load_catalog(const std::filesystem::path& path);

}  // namespace vds
