#include "ashe/cnn.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

#include "ashe/errors.hpp"
#include "json.hpp"

namespace ashe {

static_assert(std::endian::native == std::endian::little,
              "weight files are little-endian; big-endian hosts unsupported");

namespace {

constexpr char kMagic[8] = {'A', 'S', 'H', 'E', 'C', 'N', 'N', '1'};

std::string sidecar_path(const std::string& path) { return path + ".json"; }

}  // namespace

void save_model(const std::string& path, const CnnModel& m,
                const ModelMeta& meta) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(f), "save_model: cannot open output file");
    f.write(kMagic, sizeof(kMagic));
    for (const auto* p : m.params()) {
        f.write(reinterpret_cast<const char*>(p->ptr()),
                static_cast<std::streamsize>(p->numel() * sizeof(float)));
    }
    f.flush();
    if (!f) throw DataError("save_model: short write to " + path);

    nlohmann::json j;
    j["arch"] = model_arch_string(m);
    j["arch_hash"] = model_arch_hash(m);
    j["param_count"] = m.param_count();
    j["best_epoch"] = meta.best_epoch;
    j["val_accuracy"] = meta.val_accuracy;
    j["train_config"] =
        nlohmann::json::parse(meta.train_config_json, nullptr, false);
    if (j["train_config"].is_discarded()) j["train_config"] = nlohmann::json::object();
    std::ofstream s(sidecar_path(path), std::ios::trunc);
    require(static_cast<bool>(s), "save_model: cannot open sidecar file");
    s << j.dump(2) << "\n";
}

CnnModel load_model(const std::string& path, ModelMeta* meta) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("load_model: cannot open " + path);
    f.seekg(0, std::ios::end);
    const int64_t size = static_cast<int64_t>(f.tellg());
    f.seekg(0, std::ios::beg);

    CnnModel m = CnnModel::standard();
    const int64_t expected =
        static_cast<int64_t>(sizeof(kMagic)) +
        m.param_count() * static_cast<int64_t>(sizeof(float));
    if (size != expected)
        throw DataError("load_model: " + path + " has " + std::to_string(size) +
                        " bytes, expected " + std::to_string(expected));
    char magic[8];
    f.read(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("load_model: bad magic in " + path);
    for (auto* p : m.params()) {
        f.read(reinterpret_cast<char*>(p->ptr()),
               static_cast<std::streamsize>(p->numel() * sizeof(float)));
    }
    if (!f) throw DataError("load_model: short read from " + path);

    if (meta) {
        *meta = ModelMeta{};
        std::ifstream s(sidecar_path(path));
        if (s) {
            nlohmann::json j = nlohmann::json::parse(s, nullptr, false);
            if (!j.is_discarded()) {
                meta->arch_hash = j.value("arch_hash", uint64_t{0});
                meta->arch = j.value("arch", std::string{});
                meta->best_epoch = j.value("best_epoch", -1);
                meta->val_accuracy = j.value("val_accuracy", 0.0);
                if (j.contains("train_config"))
                    meta->train_config_json = j["train_config"].dump();
                if (meta->arch_hash != 0 && meta->arch_hash != model_arch_hash(m))
                    throw DataError("load_model: sidecar architecture mismatch");
            }
        }
    }
    return m;
}

}  // namespace ashe
