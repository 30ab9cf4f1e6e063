#include "vds/catalog.hpp"

#include "vds/error.hpp"
#include "vds/text_io.hpp"

namespace vds {

namespace {

struct Inserter {
    std::map<std::string, Transformation, std::less<>>& transformations;
    std::map<std::string, Derivation, std::less<>>& derivations;
    std::map<std::string, std::string, std::less<>>& producer_index;

    void operator()(const Transformation& tr) {
        auto [it, inserted] = transformations.try_emplace(tr.name, tr);
        if (!inserted && it->second != tr) {
            throw DuplicateName("TR " + tr.name + " already exists with different content");
        }
    }

    void operator()(const Derivation& dv) {
        if (auto it = derivations.find(dv.name); it != derivations.end()) {
            if (it->second == dv) return;
            throw DuplicateName("DV " + dv.name + " already exists with different content");
        }
        const auto outputs = dv.declared_outputs();
        for (const auto& lfn : outputs) {
            if (auto it = producer_index.find(lfn); it != producer_index.end()) {
                throw ConflictingProducer(lfn, it->second, dv.name);
            }
        }
        for (const auto& lfn : outputs) producer_index.emplace(lfn, dv.name);
        derivations.emplace(dv.name, dv);
    }
};

}  // namespace

void VirtualDataCatalog::insert(const VdlObject& object) {
    std::visit(Inserter{transformations_, derivations_, producer_index_}, object);
}

const Transformation* VirtualDataCatalog::find_transformation(std::string_view name) const {
    auto it = transformations_.find(name);
    return it == transformations_.end() ? nullptr : &it->second;
}

const Derivation* VirtualDataCatalog::find_derivation(std::string_view name) const {
    auto it = derivations_.find(name);
    return it == derivations_.end() ? nullptr : &it->second;
}

const Derivation* VirtualDataCatalog::find_producer(std::string_view lfn) const {
    auto it = producer_index_.find(lfn);
    return it == producer_index_.end() ? nullptr : find_derivation(it->second);
}

Binding VirtualDataCatalog::bind(std::string_view dv_name) const {
    const Derivation* dv = find_derivation(dv_name);
    if (!dv) throw UnknownTarget("no derivation named " + std::string(dv_name));
    const Transformation* tr = find_transformation(dv->transformation_name);
    if (!tr) {
        throw UnknownTransformation("DV " + dv->name + " refers to missing TR " + dv->transformation_name);
    }
    return bind_derivation(*dv, *tr);
}

std::vector<VdlObject> VirtualDataCatalog::objects() const {
    std::vector<VdlObject> out;
    out.reserve(size());
    for (const auto& [name, tr] : transformations_) out.emplace_back(tr);
    for (const auto& [name, dv] : derivations_) out.emplace_back(dv);
    return out;
}

std::string save_catalog_text(const VirtualDataCatalog& catalog) {
    std::string out(kCatalogFormatHeader);
    out += "\n";
    for (const auto& object : catalog.objects()) {
        out += "\n";
        out += serialize_vdl(object);
    }
    return out;
}

VirtualDataCatalog load_catalog_text(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty() || trim(lines.front()) != kCatalogFormatHeader) {
        throw FormatError(1, "missing '" + std::string(kCatalogFormatHeader) + "' header");
    }
    std::vector<SourceObject> objects;
    try {
        objects = parse_vdl_with_lines(text);
    } catch (const SyntaxError& e) {
        throw FormatError(e.line(), e.detail());
    } catch (const DuplicateFormal& e) {
        throw FormatError(0, e.what());
    }
    VirtualDataCatalog catalog;
    for (const auto& [object, line] : objects) {
        try {
            catalog.insert(object);
        } catch (const Error& e) {
            throw FormatError(line, e.what());
        }
    }
    return catalog;
}

void save_catalog(const VirtualDataCatalog& catalog, const std::filesystem::path& path) {
    write_file(path, save_catalog_text(catalog));
}

VirtualDataCatalog load_catalog(const std::filesystem::path& path) {
    return load_catalog_text(read_file(path));
}

}  // namespace vds
