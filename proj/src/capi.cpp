#include "tperf/tperf.h"

#include <new>
#include <string>

#include "tperf/config.hpp"
#include "tperf/dataset.hpp"
#include "tperf/error.hpp"
#include "tperf/runner.hpp"

struct tperf_result {
    tperf::RunOutputs outputs;
    std::string out_dir;
    std::string hash;
};

struct tperf_dataset {
    tperf::AnalysisDataset data;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_error_name;

tperf_status set_error(tperf_status status, const char* name, const std::string& message) {
    g_last_error_name = name;
    g_last_error = message;
    return status;
}

tperf_status clear() {
    g_last_error.clear();
    g_last_error_name.clear();
    return TPERF_OK;
}

// Exceptions never cross the C boundary.
template <class F>
tperf_status guarded(F&& f) {
    try {
        f();
        return clear();
    } catch (const tperf::Error& e) {
        tperf_status s = TPERF_ERR_ESTIMATION;
        switch (tperf::error_category(e.code())) {
            case tperf::ErrorCategory::Config: s = TPERF_ERR_CONFIG; break;
            case tperf::ErrorCategory::Data: s = TPERF_ERR_DATA; break;
            case tperf::ErrorCategory::Estimation: s = TPERF_ERR_ESTIMATION; break;
        }
        return set_error(s, tperf::error_name(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(TPERF_ERR_INTERNAL, "Internal", "out of memory");
    } catch (const std::exception& e) {
        return set_error(TPERF_ERR_INTERNAL, "Internal", e.what());
    } catch (...) {
        return set_error(TPERF_ERR_INTERNAL, "Internal", "unknown exception");
    }
}

}  // namespace

extern "C" {

const char* tperf_version(void) { return tperf::kVersion; }
const char* tperf_last_error(void) { return g_last_error.c_str(); }
const char* tperf_last_error_name(void) { return g_last_error_name.c_str(); }

tperf_status tperf_run(const char* command, const char* config_json,
                       const tperf_options* options, tperf_result** out) {
    if (!command || !config_json || !out) {
        return set_error(TPERF_ERR_INVALID_ARGUMENT, "InvalidArgument", "NULL argument");
    }
    *out = nullptr;
    const auto cmd = tperf::parse_command(command);
    if (!cmd) {
        return set_error(TPERF_ERR_INVALID_ARGUMENT, "InvalidArgument",
                         std::string("unknown command '") + command + "'");
    }
    return guarded([&] {
        tperf::ConfigOverrides ov;
        if (options) {
            if (options->data_path) ov.data_path = options->data_path;
            if (options->out_dir) ov.out_dir = options->out_dir;
            if (options->has_seed) ov.seed = options->seed;
            if (options->threads > 0) ov.threads = options->threads;
        }
        const tperf::LoadedConfig loaded = tperf::parse_config(config_json, *cmd, ov);
        auto* r = new tperf_result{tperf::run_command(loaded), loaded.config.out_dir, loaded.hash};
        *out = r;
    });
}

const char* tperf_result_json(const tperf_result* r) {
    return r ? r->outputs.results_json.c_str() : nullptr;
}
const char* tperf_result_csv(const tperf_result* r) {
    return r ? r->outputs.results_csv.c_str() : nullptr;
}
const char* tperf_result_provenance(const tperf_result* r) {
    return r ? r->outputs.provenance_json.c_str() : nullptr;
}
const char* tperf_result_out_dir(const tperf_result* r) { return r ? r->out_dir.c_str() : nullptr; }
const char* tperf_result_config_hash(const tperf_result* r) { return r ? r->hash.c_str() : nullptr; }

tperf_status tperf_result_write(const tperf_result* r, const char* dir) {
    if (!r) return set_error(TPERF_ERR_INVALID_ARGUMENT, "InvalidArgument", "NULL result");
    return guarded([&] { tperf::write_outputs(r->outputs, dir ? dir : r->out_dir); });
}

void tperf_result_free(tperf_result* r) { delete r; }

tperf_status tperf_dataset_load(const char* path, tperf_dataset** out) {
    if (!path || !out) return set_error(TPERF_ERR_INVALID_ARGUMENT, "InvalidArgument", "NULL argument");
    *out = nullptr;
    return guarded([&] { *out = new tperf_dataset{tperf::load_csv(path)}; });
}

size_t tperf_dataset_rows(const tperf_dataset* d) { return d ? d->data.size() : 0; }
size_t tperf_dataset_target_rows(const tperf_dataset* d) { return d ? d->data.n_target() : 0; }
int tperf_dataset_studies(const tperf_dataset* d) { return d ? d->data.n_studies() : 0; }
void tperf_dataset_free(tperf_dataset* d) { delete d; }

}  // extern "C"
