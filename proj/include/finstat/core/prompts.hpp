#pragma once

#include <string>
#include <string_view>

// The three prompt templates shipped as byte-exact asset files. Each asset
// file ends with one newline that is not part of the template.
namespace finstat::prompts {

inline constexpr std::string_view k_entity_asset = "prompts/entity_extraction.txt";
inline constexpr std::string_view k_schema_asset = "prompts/schema_description.txt";
inline constexpr std::string_view k_correction_asset = "prompts/self_correction.txt";

std::string_view entity_template();
std::string_view schema_template();
std::string_view correction_template();

// Entity extraction user prompt with {task} substituted.
std::string render_entity(std::string_view task);
// Schema description system prompt. It has no placeholders but is still
// rendered so its "{{"/"}}" escapes (none today) would be honoured.
std::string render_schema();
// Self-correction user prompt with {sql_result} substituted.
std::string render_correction(std::string_view sql_result);

}  // namespace finstat::prompts
