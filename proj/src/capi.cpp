#include "bevkit.h"

#include "bevkit/config.hpp"
#include "bevkit/core/tensor_file.hpp"
#include "bevkit/errors.hpp"
#include "bevkit/pipeline.hpp"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

struct bevkit_config {
    bevkit::Config cfg;
};

struct bevkit_tensor {
    bevkit::TensorData data;
};

namespace {

thread_local std::string g_last_error;

bevkit_status fail(bevkit_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

// Every entry point funnels through here so exception-to-status mapping
// stays in one place.
template <class Fn>
bevkit_status guarded(Fn&& fn) {
    try {
        fn();
        return BEVKIT_OK;
    } catch (const bevkit::CheckError& e) {
        return fail(BEVKIT_E_CHECK, e.what());
    } catch (const bevkit::UsageError& e) {
        return fail(BEVKIT_E_USAGE, e.what());
    } catch (const bevkit::IoError& e) {
        return fail(BEVKIT_E_IO, e.what());
    } catch (const bevkit::TensorFileError& e) {
        return fail(BEVKIT_E_IO, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(BEVKIT_E_USAGE, e.what());
    } catch (const std::exception& e) {
        return fail(BEVKIT_E_INTERNAL, e.what());
    } catch (...) {
        return fail(BEVKIT_E_INTERNAL, "unknown error");
    }
}

std::vector<std::string> collect_overrides(const char* const* overrides, size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (size_t k = 0; k < n; ++k) {
        if (!overrides[k]) throw bevkit::UsageError("override list contains a null entry");
        out.emplace_back(overrides[k]);
    }
    return out;
}

const bevkit::Config& require_config(const bevkit_config* cfg) {
    if (!cfg) throw bevkit::UsageError("config handle is null");
    return cfg->cfg;
}

std::string require_path(const char* path, const char* what) {
    if (!path || !*path) throw bevkit::UsageError(std::string(what) + " is required");
    return path;
}

} // namespace

extern "C" {

const char* bevkit_last_error(void) { return g_last_error.c_str(); }

bevkit_status bevkit_config_default(const char* const* overrides, size_t n_overrides,
                                    bevkit_config** out) {
    return guarded([&] {
        if (!out) throw bevkit::UsageError("output pointer is null");
        auto handle = std::make_unique<bevkit_config>();
        handle->cfg = bevkit::config_from_json_text(
            "", collect_overrides(overrides, n_overrides));
        *out = handle.release();
    });
}

bevkit_status bevkit_config_load(const char* path, const char* const* overrides,
                                 size_t n_overrides, bevkit_config** out) {
    return guarded([&] {
        if (!out) throw bevkit::UsageError("output pointer is null");
        auto handle = std::make_unique<bevkit_config>();
        handle->cfg = bevkit::load_config(require_path(path, "config path"),
                                          collect_overrides(overrides, n_overrides));
        *out = handle.release();
    });
}

bevkit_status bevkit_config_dump(const bevkit_config* cfg, char** json_out) {
    return guarded([&] {
        if (!json_out) throw bevkit::UsageError("output pointer is null");
        const std::string text = require_config(cfg).dump_json();
        char* buf = static_cast<char*>(std::malloc(text.size() + 1));
        if (!buf) throw std::bad_alloc();
        std::memcpy(buf, text.c_str(), text.size() + 1);
        *json_out = buf;
    });
}

bevkit_status bevkit_config_hash(const bevkit_config* cfg, char out_hex[17]) {
    return guarded([&] {
        if (!out_hex) throw bevkit::UsageError("output pointer is null");
        const std::string hash = require_config(cfg).config_hash();
        std::memcpy(out_hex, hash.c_str(), 17);
    });
}

void bevkit_config_free(bevkit_config* cfg) { delete cfg; }

void bevkit_string_free(char* text) { std::free(text); }

bevkit_status bevkit_tensor_create(const uint64_t* dims, size_t rank, const float* data,
                                   bevkit_tensor** out) {
    return guarded([&] {
        if (!out) throw bevkit::UsageError("output pointer is null");
        if (rank > 0 && !dims) throw bevkit::UsageError("dims pointer is null");
        auto handle = std::make_unique<bevkit_tensor>();
        uint64_t count = 1;
        for (size_t k = 0; k < rank; ++k) {
            handle->data.dims.push_back(dims[k]);
            count *= dims[k];
        }
        if (count > 0 && !data) throw bevkit::UsageError("data pointer is null");
        handle->data.data.assign(data, data + count);
        *out = handle.release();
    });
}

bevkit_status bevkit_tensor_read(const char* path, bevkit_tensor** out) {
    return guarded([&] {
        if (!out) throw bevkit::UsageError("output pointer is null");
        auto handle = std::make_unique<bevkit_tensor>();
        handle->data = bevkit::read_tensor(require_path(path, "tensor path"));
        *out = handle.release();
    });
}

bevkit_status bevkit_tensor_write(const bevkit_tensor* tensor, const char* path) {
    return guarded([&] {
        if (!tensor) throw bevkit::UsageError("tensor handle is null");
        bevkit::write_tensor(require_path(path, "tensor path"), tensor->data.dims,
                             tensor->data.data);
    });
}

size_t bevkit_tensor_rank(const bevkit_tensor* tensor) {
    return tensor ? tensor->data.dims.size() : 0;
}

uint64_t bevkit_tensor_dim(const bevkit_tensor* tensor, size_t axis) {
    if (!tensor || axis >= tensor->data.dims.size()) return 0;
    return tensor->data.dims[axis];
}

uint64_t bevkit_tensor_size(const bevkit_tensor* tensor) {
    return tensor ? tensor->data.data.size() : 0;
}

const float* bevkit_tensor_data(const bevkit_tensor* tensor) {
    return tensor ? tensor->data.data.data() : nullptr;
}

void bevkit_tensor_free(bevkit_tensor* tensor) { delete tensor; }

bevkit_status bevkit_synth(const bevkit_config* cfg, const char* out_dir, int overwrite) {
    return guarded([&] {
        bevkit::pipeline::run_synth(require_config(cfg), require_path(out_dir, "out dir"),
                                    overwrite != 0);
    });
}

bevkit_status bevkit_stats(const bevkit_config* cfg, const char* data_dir,
                           const char* out_path) {
    return guarded([&] {
        bevkit::pipeline::run_stats(require_config(cfg), require_path(data_dir, "data dir"),
                                    require_path(out_path, "output path"));
    });
}

bevkit_status bevkit_maskgen(const bevkit_config* cfg, const char* data_dir,
                             const char* stats_path) {
    return guarded([&] {
        bevkit::pipeline::run_maskgen_dataset(require_config(cfg),
                                              require_path(data_dir, "data dir"),
                                              stats_path ? stats_path : "");
    });
}

bevkit_status bevkit_maskgen_file(const bevkit_config* cfg, const char* cloud_path,
                                  const char* teacher_path, const char* stats_path,
                                  const char* out_path) {
    return guarded([&] {
        bevkit::pipeline::run_maskgen_single(
            require_config(cfg), require_path(cloud_path, "cloud path"),
            require_path(teacher_path, "teacher path"), stats_path ? stats_path : "",
            require_path(out_path, "output path"));
    });
}

bevkit_status bevkit_pretrain(const bevkit_config* cfg, const char* data_dir,
                              const char* stats_path, const char* out_dir, int overwrite) {
    return guarded([&] {
        bevkit::pipeline::run_pretrain(require_config(cfg), require_path(data_dir, "data dir"),
                                       require_path(stats_path, "stats path"),
                                       require_path(out_dir, "out dir"), overwrite != 0);
    });
}

bevkit_status bevkit_finetune(const bevkit_config* cfg, const char* data_dir,
                              const char* init_checkpoint, const char* teacher_head_dir,
                              int inherit, const char* out_dir, int overwrite) {
    return guarded([&] {
        bevkit::pipeline::run_finetune(
            require_config(cfg), require_path(data_dir, "data dir"),
            init_checkpoint ? init_checkpoint : "", teacher_head_dir ? teacher_head_dir : "",
            inherit != 0, require_path(out_dir, "out dir"), overwrite != 0);
    });
}

bevkit_status bevkit_eval(const bevkit_config* cfg, const char* data_dir,
                          const char* checkpoint_dir, const char* split,
                          const char* out_path) {
    return guarded([&] {
        bevkit::pipeline::run_eval(require_config(cfg), require_path(data_dir, "data dir"),
                                   require_path(checkpoint_dir, "checkpoint dir"),
                                   split && *split ? split : "heldout",
                                   require_path(out_path, "output path"));
    });
}

bevkit_status bevkit_gradcheck(const bevkit_config* cfg, const char* report_path) {
    return guarded([&] {
        bevkit::pipeline::run_gradcheck_cmd(require_config(cfg),
                                            report_path ? report_path : "");
    });
}

bevkit_status bevkit_ablate(const bevkit_config* cfg, const char* preset,
                            const char* out_dir, int overwrite) {
    return guarded([&] {
        bevkit::pipeline::run_ablate(require_config(cfg), require_path(preset, "preset"),
                                     require_path(out_dir, "out dir"), overwrite != 0);
    });
}

} // extern "C"
