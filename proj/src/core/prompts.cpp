#include "finstat/core/prompts.hpp"

#include "finstat/core/assets.hpp"
#include "finstat/core/text.hpp"

namespace finstat::prompts {
namespace {

std::string_view without_final_newline(std::string_view s) {
  if (s.ends_with('\n')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view entity_template() { return without_final_newline(assets::get(k_entity_asset)); }
std::string_view schema_template() { return without_final_newline(assets::get(k_schema_asset)); }
std::string_view correction_template() { return without_final_newline(assets::get(k_correction_asset)); }

std::string render_entity(std::string_view task) {
  return text::render_template(entity_template(), {{"task", std::string(task)}});
}

std::string render_schema() { return text::render_template(schema_template(), {}); }

std::string render_correction(std::string_view sql_result) {
  return text::render_template(correction_template(), {{"sql_result", std::string(sql_result)}});
}

}  // namespace finstat::prompts
