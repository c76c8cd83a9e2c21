#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace trendscope {

std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::string ascii_lower(std::string_view s);
std::string ascii_upper(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);

// Replaces every {{name}} in the template. Unknown placeholders are left as is.
std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& vars);

// Strips an optional Markdown code fence around a model reply.
std::string strip_code_fence(std::string_view reply);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace trendscope
