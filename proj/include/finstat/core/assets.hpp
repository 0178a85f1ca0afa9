#pragma once

#include <optional>
#include <string_view>

// Repo asset files compiled into the library (see assets/ and cmake/EmbedAssets.cmake).
namespace finstat::assets {

std::optional<std::string_view> find(std::string_view name);

// Throws std::out_of_range for unknown names.
std::string_view get(std::string_view name);

}  // namespace finstat::assets
