#include "si/checkpoint.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace si::models {

namespace {

constexpr char kMagic[4] = {'S', 'I', 'N', 'V'};

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <class T>
void write_pod(std::ofstream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  write_bytes(out, &v, sizeof(v));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n, const std::string& what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    fail(ErrorCategory::Format,
         "checkpoint truncated while reading " + what + " (wanted " + std::to_string(n) +
             " bytes, got " + std::to_string(in.gcount()) + ")");
}

template <class T>
T read_pod(std::ifstream& in, const std::string& what) {
  static_assert(std::is_trivially_copyable_v<T>);
  T v;
  read_bytes(in, &v, sizeof(v), what);
  return v;
}

void write_tensor(std::ofstream& out, const std::string& name, const nn::Mat<float>& m) {
  if (name.size() > 0xFFFF) fail(ErrorCategory::InvalidParameter, "tensor name too long");
  write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
  write_bytes(out, name.data(), name.size());
  write_pod<std::uint8_t>(out, 2);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  write_bytes(out, m.data(), sizeof(float) * static_cast<std::size_t>(m.size()));
}

struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

}  // namespace

nlohmann::json CheckpointMeta::to_json() const {
  return nlohmann::json{
      {"epochs_trained", epochs_trained},
      {"best_epoch", best_epoch},
      {"train_loss_history", train_loss_history},
      {"dev_loss_history", dev_loss_history},
      {"dev_mean_oral_history", dev_mean_oral_history},
      {"opt_step", opt_step},
      {"extra", extra},
  };
}

CheckpointMeta CheckpointMeta::from_json(const nlohmann::json& j) {
  CheckpointMeta m;
  try {
    m.epochs_trained = j.at("epochs_trained").get<int>();
    m.best_epoch = j.at("best_epoch").get<int>();
    m.train_loss_history = j.at("train_loss_history").get<std::vector<double>>();
    m.dev_loss_history = j.at("dev_loss_history").get<std::vector<double>>();
    m.dev_mean_oral_history = j.at("dev_mean_oral_history").get<std::vector<double>>();
    m.opt_step = j.at("opt_step").get<std::int64_t>();
    m.extra = j.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::Format, std::string("bad checkpoint metadata: ") + e.what());
  }
  return m;
}

void save_checkpoint(const std::string& path, Model<float>& model, const CheckpointMeta& meta,
                     nn::Adam<float>* opt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCategory::Io, "cannot open checkpoint for writing: " + path);

  nlohmann::json header = model.spec().to_json();
  header["metadata"] = meta.to_json();
  const std::string header_str = header.dump();
  write_bytes(out, kMagic, 4);
  write_pod<std::uint32_t>(out, kCheckpointVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(header_str.size()));
  write_bytes(out, header_str.data(), header_str.size());

  const nn::ParamList<float> params = model.params();
  std::uint32_t count = static_cast<std::uint32_t>(params.size());
  if (opt) count += static_cast<std::uint32_t>(2 * opt->slot_count());
  write_pod<std::uint32_t>(out, count);
  for (const auto& p : params) write_tensor(out, p.name, *p.value);
  if (opt) {
    for (std::size_t i = 0; i < opt->slot_count(); ++i) {
      write_tensor(out, "opt/m/" + opt->slot_name(i), opt->first_moment(i));
      write_tensor(out, "opt/v/" + opt->slot_name(i), opt->second_moment(i));
    }
  }
  out.flush();
  if (!out) fail(ErrorCategory::Io, "write failed for checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::Io, "cannot open checkpoint: " + path);

  char magic[4];
  read_bytes(in, magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    fail(ErrorCategory::Format, "not a checkpoint file (bad magic): " + path);
  const auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion)
    fail(ErrorCategory::Format, "unsupported checkpoint version " + std::to_string(version) +
                                    " (expected " + std::to_string(kCheckpointVersion) + ")");

  const auto header_len = read_pod<std::uint32_t>(in, "header length");
  std::string header_str(header_len, '\0');
  read_bytes(in, header_str.data(), header_len, "header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::Format, std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  LoadedCheckpoint ck;
  ck.spec = ModelSpec::from_json(header);
  ck.meta = CheckpointMeta::from_json(
      header.contains("metadata") ? header.at("metadata") : nlohmann::json::object());
  ck.model = std::make_unique<Model<float>>(ck.spec);

  const auto count = read_pod<std::uint32_t>(in, "tensor count");
  std::map<std::string, RawTensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint16_t>(in, "tensor name length");
    std::string name(name_len, '\0');
    read_bytes(in, name.data(), name_len, "tensor name");
    const auto rank = read_pod<std::uint8_t>(in, "tensor rank of " + name);
    RawTensor t;
    std::size_t total = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      t.dims.push_back(read_pod<std::uint32_t>(in, "tensor dims of " + name));
      total *= t.dims.back();
    }
    t.data.resize(total);
    read_bytes(in, t.data.data(), sizeof(float) * total, "tensor payload of " + name);
    if (!tensors.emplace(name, std::move(t)).second)
      fail(ErrorCategory::Format, "duplicate tensor '" + name + "' in checkpoint");
  }

  const nn::ParamList<float> params = ck.model->params();
  std::size_t used = 0;
  for (const auto& p : params) {
    auto it = tensors.find(p.name);
    if (it == tensors.end())
      fail(ErrorCategory::Format, "checkpoint is missing tensor '" + p.name + "'");
    const RawTensor& t = it->second;
    if (t.dims.size() != 2 || static_cast<Eigen::Index>(t.dims[0]) != p.value->rows() ||
        static_cast<Eigen::Index>(t.dims[1]) != p.value->cols())
      fail(ErrorCategory::Format,
           "tensor '" + p.name + "' shape disagrees with the model spec");
    std::memcpy(p.value->data(), t.data.data(), sizeof(float) * t.data.size());
    ++used;
  }
  for (const auto& [name, t] : tensors) {
    if (name.rfind("opt/m/", 0) == 0 || name.rfind("opt/v/", 0) == 0) {
      nn::Mat<float> m(t.dims.size() == 2 ? t.dims[0] : 1,
                       t.dims.size() == 2 ? t.dims[1] : static_cast<std::uint32_t>(t.data.size()));
      std::memcpy(m.data(), t.data.data(), sizeof(float) * t.data.size());
      (name[4] == 'm' ? ck.opt_m : ck.opt_v)[name.substr(6)] = std::move(m);
      ++used;
    }
  }
  if (used != tensors.size())
    for (const auto& [name, t] : tensors)
      if (name.rfind("opt/", 0) != 0 && tensors.count(name) &&
          std::none_of(params.begin(), params.end(),
                       [&](const auto& p) { return p.name == name; }))
        fail(ErrorCategory::Format, "checkpoint contains unknown tensor '" + name + "'");
  return ck;
}

void restore_optimizer(nn::Adam<float>& opt, const LoadedCheckpoint& ck) {
  for (std::size_t i = 0; i < opt.slot_count(); ++i) {
    const std::string& name = opt.slot_name(i);
    auto im = ck.opt_m.find(name);
    auto iv = ck.opt_v.find(name);
    if (im == ck.opt_m.end() || iv == ck.opt_v.end())
      fail(ErrorCategory::Format, "checkpoint lacks optimizer state for '" + name + "'");
    opt.first_moment(i) = im->second;
    opt.second_moment(i) = iv->second;
  }
  opt.set_step_count(ck.meta.opt_step);
}

}  // namespace si::models
