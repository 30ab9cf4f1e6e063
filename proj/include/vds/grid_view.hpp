#pragma once

#include <cstddef>
#include <string_view>

namespace vds {

/// What the scheduler can observe about the grid: how many of its DAGs are
/// still live at each site.
class GridView {
public:
    virtual ~GridView() = default;
    virtual std::size_t running_count(std::string_view site) const = 0;
};

}  // namespace vds
