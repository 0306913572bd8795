#include "dgfl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dgfl/errors.hpp"
#include "dgfl/metrics.hpp"

namespace dgfl {
namespace {

constexpr const char* kFormatTag = "dgfl-checkpoint";

void append_doubles(std::string& out, const std::vector<double>& values) {
  static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes a little-endian host");
  const auto* bytes = reinterpret_cast<const char*>(values.data());
  out.append(bytes, values.size() * sizeof(double));
}

std::vector<double> take_doubles(const std::string& payload, std::size_t& pos, std::size_t count,
                                 const std::string& path) {
  const std::size_t bytes = count * sizeof(double);
  if (pos + bytes > payload.size()) throw FormatError(path, 0, "checkpoint payload truncated");
  std::vector<double> values(count);
  std::memcpy(values.data(), payload.data() + pos, bytes);
  pos += bytes;
  return values;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::size_t p = ckpt.dims.parameter_count();
  std::string payload;
  for (const ClientSnapshot& c : ckpt.clients) {
    if (c.params.size() != p || c.first_moment.size() != p || c.second_moment.size() != p)
      throw ShapeError("checkpoint: client snapshot does not match model dims");
    append_doubles(payload, c.params);
    append_doubles(payload, c.first_moment);
    append_doubles(payload, c.second_moment);
  }
  if (!ckpt.global_params.empty() && ckpt.global_params.size() != p)
    throw ShapeError("checkpoint: global parameters do not match model dims");
  append_doubles(payload, ckpt.global_params);

  nlohmann::ordered_json header;
  header["format"] = kFormatTag;
  header["version"] = kCheckpointVersion;
  header["method"] = ckpt.method;
  header["round"] = ckpt.round;
  header["seed"] = ckpt.seed;
  header["dims"] = {{"feature_dim", ckpt.dims.feature_dim},
                    {"hidden", ckpt.dims.hidden},
                    {"layers", ckpt.dims.layers},
                    {"num_classes", ckpt.dims.num_classes}};
  header["parameter_count"] = p;
  header["n_clients"] = ckpt.clients.size();
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const ClientSnapshot& c : ckpt.clients) steps.push_back(c.step_count);
  header["adam_steps"] = steps;
  header["has_global"] = !ckpt.global_params.empty();
  header["payload_bytes"] = payload.size();

  write_atomic(path, header.dump() + "\n" + payload);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::string header_line;
  std::getline(in, header_line);
  std::ostringstream rest;
  rest << in.rdbuf();
  const std::string payload = rest.str();
  const std::string where = path.string();

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where, 1, std::string("bad checkpoint header: ") + e.what());
  }
  try {
    if (header.at("format") != kFormatTag) throw FormatError(where, 1, "not a checkpoint file");
    if (header.at("version").get<int>() != kCheckpointVersion)
      throw FormatError(where, 1, "unsupported checkpoint version " + header.at("version").dump());

    Checkpoint ckpt;
    ckpt.method = header.at("method").get<std::string>();
    ckpt.round = header.at("round").get<int>();
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    const auto& dims = header.at("dims");
    ckpt.dims = GinDims{dims.at("feature_dim").get<std::size_t>(), dims.at("hidden").get<std::size_t>(),
                        dims.at("layers").get<std::size_t>(), dims.at("num_classes").get<std::size_t>()};
    const std::size_t p = ckpt.dims.parameter_count();
    if (header.at("parameter_count").get<std::size_t>() != p) throw FormatError(where, 1, "parameter count mismatch");
    if (header.at("payload_bytes").get<std::size_t>() != payload.size())
      throw FormatError(where, 0, "payload size does not match header");

    const auto n = header.at("n_clients").get<std::size_t>();
    const auto& steps = header.at("adam_steps");
    if (steps.size() != n) throw FormatError(where, 1, "adam_steps length mismatch");
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ClientSnapshot c;
      c.params = take_doubles(payload, pos, p, where);
      c.first_moment = take_doubles(payload, pos, p, where);
      c.second_moment = take_doubles(payload, pos, p, where);
      c.step_count = steps[i].get<std::uint64_t>();
      ckpt.clients.push_back(std::move(c));
    }
    if (header.at("has_global").get<bool>()) ckpt.global_params = take_doubles(payload, pos, p, where);
    if (pos != payload.size()) throw FormatError(where, 0, "trailing bytes after payload");
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where, 1, std::string("bad checkpoint header: ") + e.what());
  }
}

}  // namespace dgfl
