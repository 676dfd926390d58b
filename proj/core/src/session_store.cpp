#include <fstream>
#include <sstream>
#include <system_error>

#include "openpref/errors.hpp"
#include "openpref/serialization.hpp"
#include "openpref/session.hpp"

namespace openpref {

namespace fs = std::filesystem;

SessionStore::SessionStore(fs::path directory) : directory_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(directory_, ec);
  if (ec) throw PersistenceError("cannot create data directory " + directory_.string() + ": " + ec.message());
}

fs::path SessionStore::path_for(const std::string& id) const {
  for (char c : id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_')
      throw NotFoundError("invalid session id");
  return directory_ / (id + ".json");
}

void SessionStore::save(const Session& session) {
  const auto target = path_for(session.id);
  const auto temp = fs::path(target.string() + ".tmp");
  if (fault_hook) fault_hook("begin");
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw PersistenceError("cannot write " + temp.string());
    out << nlohmann::json(session).dump();
    out.flush();
    if (!out) throw PersistenceError("short write to " + temp.string());
  }
  if (fault_hook) fault_hook("written");
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) throw PersistenceError("cannot replace " + target.string() + ": " + ec.message());
  if (fault_hook) fault_hook("renamed");
}

Session SessionStore::load(const std::string& id) const {
  const auto path = path_for(id);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("no session with id " + id);
  std::ostringstream ss;
  ss << in.rdbuf();
  Session s;
  try {
    s = parse_json(ss.str()).get<Session>();
  } catch (const nlohmann::json::exception& e) {
    throw PersistenceError("corrupt session document " + path.string() + ": " + e.what());
  }
  s.validate();
  return s;
}

bool SessionStore::exists(const std::string& id) const {
  try {
    return fs::exists(path_for(id));
  } catch (const NotFoundError&) {
    return false;
  }
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(directory_)) {
    if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace openpref
