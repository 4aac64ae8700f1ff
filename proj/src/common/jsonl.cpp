#include "consultrl/common/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "consultrl/common/error.hpp"
#include "consultrl/common/text.hpp"

namespace consultrl::jsonl {

namespace fs = std::filesystem;

std::vector<nlohmann::json> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();

  std::vector<nlohmann::json> records;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    const std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail
    ++line_no;
    std::string_view line(content.data() + pos, nl - pos);
    pos = nl + 1;
    if (text::trim(line).empty()) continue;
    try {
      records.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  // A final line lacking '\n' is accepted only if it parses on its own;
  // hand-written fixtures often omit the last newline.
  if (pos < content.size()) {
    std::string_view tail(content.data() + pos, content.size() - pos);
    if (!text::trim(tail).empty()) {
      auto parsed = nlohmann::json::parse(tail, nullptr, /*allow_exceptions=*/false);
      if (!parsed.is_discarded()) records.push_back(std::move(parsed));
    }
  }
  return records;
}

std::string dump_line(const nlohmann::ordered_json& record) {
  return record.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

void write_file(const fs::path& path, const std::vector<nlohmann::ordered_json>& records) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    for (const auto& r : records) out << dump_line(r) << '\n';
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

}  // namespace consultrl::jsonl
