#include "lstcoseg/lstcoseg.h"

#include <cmath>
#include <cstring>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lstcoseg/eval.hpp"
#include "lstcoseg/orchestrator.hpp"

struct lstcoseg_config {
    lstcoseg::CosegConfig config;
};

struct lstcoseg_session {
    lstcoseg::CosegConfig config;
    std::vector<lstcoseg::Image> images;
    std::vector<std::optional<lstcoseg::SaliencyMap>> saliency;
};

struct lstcoseg_result {
    lstcoseg::CosegResult result;
};

namespace {

thread_local std::string g_last_error;

lstcoseg_status fail(lstcoseg_status status, std::string message)
{
    g_last_error = std::move(message);
    return status;
}

template <class Fn>
lstcoseg_status guarded(Fn&& fn) noexcept
{
    try {
        g_last_error.clear();
        return fn();
    } catch (const lstcoseg::StageError& e) {
        return fail(e.invalid_input() ? LSTCOSEG_ERR_DATA : LSTCOSEG_ERR_INTERNAL, e.what());
    } catch (const lstcoseg::InvalidInput& e) {
        return fail(LSTCOSEG_ERR_DATA, e.what());
    } catch (const std::bad_alloc&) {
        return fail(LSTCOSEG_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(LSTCOSEG_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(LSTCOSEG_ERR_INTERNAL, "unknown error");
    }
}

// Applies a change to a copy of the config and keeps it only if valid.
template <class Fn>
lstcoseg_status update_config(lstcoseg_config* config, Fn&& change) noexcept
{
    if (!config) return fail(LSTCOSEG_ERR_ARGUMENT, "null config");
    return guarded([&] {
        lstcoseg::CosegConfig next = config->config;
        change(next);
        try {
            next.validate();
        } catch (const lstcoseg::InvalidInput& e) {
            return fail(LSTCOSEG_ERR_ARGUMENT, e.what());
        }
        config->config = std::move(next);
        return LSTCOSEG_OK;
    });
}

lstcoseg_status check_result_image(const lstcoseg_result* result, size_t index)
{
    if (!result) return fail(LSTCOSEG_ERR_ARGUMENT, "null result");
    if (index >= result->result.images.size()) return fail(LSTCOSEG_ERR_ARGUMENT, "image index out of range");
    return LSTCOSEG_OK;
}

nlohmann::json config_json(const lstcoseg::CosegConfig& c)
{
    return {
        {"alpha", c.alpha},
        {"lambda", c.lambda},
        {"scales", c.scales},
        {"gmm_components", c.gmm_components},
        {"outer_iterations", c.outer_iterations},
        {"diffusion_tol", c.diffusion_tol},
        {"diffusion_max_sweeps", c.diffusion_max_sweeps},
        {"joint_color_models", c.joint_color_models},
        {"transfer_enabled", c.transfer_enabled},
        {"saliency_source", c.saliency_source == lstcoseg::SaliencySource::builtin ? "builtin" : "external"},
        {"saliency_cut", c.saliency_cut},
        {"saliency_passes", c.saliency_passes},
        {"saliency_factor", c.saliency_factor},
        {"pairwise_gamma", c.pairwise_gamma},
        {"gmm_max_samples", c.gmm_max_samples},
        {"seed", c.seed},
        {"threads", c.threads},
    };
}

}  // namespace

extern "C" {

const char* lstcoseg_version(void) { return "1.0.0"; }

const char* lstcoseg_last_error(void) { return g_last_error.c_str(); }

lstcoseg_status lstcoseg_config_create(lstcoseg_config** out)
{
    if (!out) return fail(LSTCOSEG_ERR_ARGUMENT, "null output pointer");
    return guarded([&] {
        *out = new lstcoseg_config{};
        return LSTCOSEG_OK;
    });
}

void lstcoseg_config_destroy(lstcoseg_config* config) { delete config; }

lstcoseg_status lstcoseg_config_set_alpha(lstcoseg_config* config, double alpha)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.alpha = alpha; });
}

lstcoseg_status lstcoseg_config_set_lambda(lstcoseg_config* config, double lambda)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.lambda = lambda; });
}

lstcoseg_status lstcoseg_config_set_scales(lstcoseg_config* config, const int* scales, size_t count)
{
    if (!scales && count > 0) return fail(LSTCOSEG_ERR_ARGUMENT, "null scales");
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.scales.assign(scales, scales + count); });
}

lstcoseg_status lstcoseg_config_set_gmm_components(lstcoseg_config* config, int components)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.gmm_components = components; });
}

lstcoseg_status lstcoseg_config_set_outer_iterations(lstcoseg_config* config, int iterations)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.outer_iterations = iterations; });
}

lstcoseg_status lstcoseg_config_set_diffusion_tol(lstcoseg_config* config, double tol)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.diffusion_tol = tol; });
}

lstcoseg_status lstcoseg_config_set_diffusion_max_sweeps(lstcoseg_config* config, int sweeps)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.diffusion_max_sweeps = sweeps; });
}

lstcoseg_status lstcoseg_config_set_joint_color_models(lstcoseg_config* config, int enabled)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.joint_color_models = enabled != 0; });
}

lstcoseg_status lstcoseg_config_set_transfer_enabled(lstcoseg_config* config, int enabled)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.transfer_enabled = enabled != 0; });
}

lstcoseg_status lstcoseg_config_set_external_saliency(lstcoseg_config* config, int enabled)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) {
        c.saliency_source = enabled ? lstcoseg::SaliencySource::external : lstcoseg::SaliencySource::builtin;
    });
}

lstcoseg_status lstcoseg_config_set_saliency_cut(lstcoseg_config* config, int enabled)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.saliency_cut = enabled != 0; });
}

lstcoseg_status lstcoseg_config_set_saliency_passes(lstcoseg_config* config, int passes)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.saliency_passes = passes; });
}

lstcoseg_status lstcoseg_config_set_saliency_factor(lstcoseg_config* config, double factor)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.saliency_factor = factor; });
}

lstcoseg_status lstcoseg_config_set_pairwise_gamma(lstcoseg_config* config, double gamma)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.pairwise_gamma = gamma; });
}

lstcoseg_status lstcoseg_config_set_gmm_max_samples(lstcoseg_config* config, int samples)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.gmm_max_samples = samples; });
}

lstcoseg_status lstcoseg_config_set_seed(lstcoseg_config* config, uint64_t seed)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.seed = seed; });
}

lstcoseg_status lstcoseg_config_set_threads(lstcoseg_config* config, int threads)
{
    return update_config(config, [&](lstcoseg::CosegConfig& c) { c.threads = threads; });
}

lstcoseg_status lstcoseg_config_validate(const lstcoseg_config* config)
{
    if (!config) return fail(LSTCOSEG_ERR_ARGUMENT, "null config");
    return guarded([&] {
        config->config.validate();
        return LSTCOSEG_OK;
    });
}

lstcoseg_status lstcoseg_session_create(const lstcoseg_config* config, lstcoseg_session** out)
{
    if (!config || !out) return fail(LSTCOSEG_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        config->config.validate();
        *out = new lstcoseg_session{config->config, {}, {}};
        return LSTCOSEG_OK;
    });
}

void lstcoseg_session_destroy(lstcoseg_session* session) { delete session; }

lstcoseg_status lstcoseg_session_add_image(lstcoseg_session* session, const char* id, int width, int height,
                                           const uint8_t* rgb)
{
    if (!session || !id || !rgb) return fail(LSTCOSEG_ERR_ARGUMENT, "null argument");
    if (width <= 0 || height <= 0) return fail(LSTCOSEG_ERR_DATA, "image dimensions must be positive");
    return guarded([&] {
        const size_t n = static_cast<size_t>(width) * static_cast<size_t>(height) * 3;
        session->images.push_back(lstcoseg::Image::from_rgb8(id, width, height, {rgb, n}));
        session->saliency.emplace_back();
        return LSTCOSEG_OK;
    });
}

lstcoseg_status lstcoseg_session_set_saliency(lstcoseg_session* session, size_t index, const uint8_t* gray)
{
    if (!session || !gray) return fail(LSTCOSEG_ERR_ARGUMENT, "null argument");
    if (index >= session->images.size()) return fail(LSTCOSEG_ERR_ARGUMENT, "image index out of range");
    return guarded([&] {
        const lstcoseg::Image& im = session->images[index];
        lstcoseg::SaliencyMap map(im.width(), im.height(), 0.0);
        for (size_t i = 0; i < map.size(); ++i) map.data[i] = gray[i] / 255.0;
        session->saliency[index] = std::move(map);
        return LSTCOSEG_OK;
    });
}

lstcoseg_status lstcoseg_session_image_count(const lstcoseg_session* session, size_t* count)
{
    if (!session || !count) return fail(LSTCOSEG_ERR_ARGUMENT, "null argument");
    *count = session->images.size();
    return LSTCOSEG_OK;
}

lstcoseg_status lstcoseg_session_run(lstcoseg_session* session, lstcoseg_result** out)
{
    if (!session || !out) return fail(LSTCOSEG_ERR_ARGUMENT, "null argument");
    if (session->images.empty()) return fail(LSTCOSEG_ERR_STATE, "session has no images");
    return guarded([&] {
        std::vector<lstcoseg::SaliencyMap> external;
        if (session->config.saliency_source == lstcoseg::SaliencySource::external) {
            for (size_t m = 0; m < session->saliency.size(); ++m) {
                if (!session->saliency[m])
                    return fail(LSTCOSEG_ERR_STATE, "no external saliency map for image '" + session->images[m].id() + "'");
                external.push_back(*session->saliency[m]);
            }
        }
        auto result = std::make_unique<lstcoseg_result>();
        result->result = lstcoseg::cosegment(session->images, session->config, external);
        *out = result.release();
        return LSTCOSEG_OK;
    });
}

void lstcoseg_result_destroy(lstcoseg_result* result) { delete result; }

lstcoseg_status lstcoseg_result_image_count(const lstcoseg_result* result, size_t* count)
{
    if (!result || !count) return fail(LSTCOSEG_ERR_ARGUMENT, "null argument");
    *count = result->result.images.size();
    return LSTCOSEG_OK;
}

lstcoseg_status lstcoseg_result_image_size(const lstcoseg_result* result, size_t index, int* width, int* height)
{
    if (const lstcoseg_status s = check_result_image(result, index); s != LSTCOSEG_OK) return s;
    if (!width || !height) return fail(LSTCOSEG_ERR_ARGUMENT, "null argument");
    *width = result->result.images[index].mask.width;
    *height = result->result.images[index].mask.height;
    return LSTCOSEG_OK;
}

static lstcoseg_status copy_mask(const lstcoseg::BinaryMask& mask, uint8_t* out, size_t capacity)
{
    if (!out) return fail(LSTCOSEG_ERR_ARGUMENT, "null output buffer");
    if (capacity < mask.size()) return fail(LSTCOSEG_ERR_ARGUMENT, "output buffer too small");
    for (size_t i = 0; i < mask.size(); ++i) out[i] = mask.data[i] ? 255 : 0;
    return LSTCOSEG_OK;
}

lstcoseg_status lstcoseg_result_mask(const lstcoseg_result* result, size_t index, uint8_t* out, size_t capacity)
{
    if (const lstcoseg_status s = check_result_image(result, index); s != LSTCOSEG_OK) return s;
    return copy_mask(result->result.images[index].mask, out, capacity);
}

lstcoseg_status lstcoseg_result_initial_mask(const lstcoseg_result* result, size_t index, uint8_t* out, size_t capacity)
{
    if (const lstcoseg_status s = check_result_image(result, index); s != LSTCOSEG_OK) return s;
    return copy_mask(result->result.images[index].initial_mask, out, capacity);
}

lstcoseg_status lstcoseg_result_soft_mask(const lstcoseg_result* result, size_t index, uint8_t* out, size_t capacity)
{
    if (const lstcoseg_status s = check_result_image(result, index); s != LSTCOSEG_OK) return s;
    const lstcoseg::SoftMask& z = result->result.images[index].zbar;
    if (!out) return fail(LSTCOSEG_ERR_ARGUMENT, "null output buffer");
    if (capacity < z.size()) return fail(LSTCOSEG_ERR_ARGUMENT, "output buffer too small");
    for (size_t i = 0; i < z.size(); ++i) out[i] = static_cast<uint8_t>(std::lround(std::clamp(z.data[i], 0.0, 1.0) * 255.0));
    return LSTCOSEG_OK;
}

lstcoseg_status lstcoseg_result_report_json(const lstcoseg_result* result, char* buffer, size_t capacity, size_t* length)
{
    if (!result || !length) return fail(LSTCOSEG_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        const lstcoseg::CosegResult& r = result->result;
        nlohmann::json images = nlohmann::json::array();
        for (const auto& im : r.images) {
            images.push_back({{"id", im.image_id},
                              {"width", im.mask.width},
                              {"height", im.mask.height},
                              {"foreground_pixels", lstcoseg::count_foreground(im.mask)},
                              {"energy_trace", im.energy_trace}});
        }
        const nlohmann::json report = {
            {"config", config_json(r.config)},
            {"transfer_active", r.transfer_active},
            {"patch_count", r.patch_count},
            {"energy_trace", r.energy_trace},
            {"diffusion_sweeps", r.diffusion_sweeps},
            {"images", images},
            {"timings_seconds",
             {{"saliency", r.timings.saliency}, {"patch_graph", r.timings.patch_graph}, {"optimization", r.timings.optimization}}},
            {"warnings", r.warnings},
        };
        const std::string text = report.dump(2);
        *length = text.size();
        if (!buffer) return LSTCOSEG_OK;
        if (capacity < text.size() + 1) return fail(LSTCOSEG_ERR_ARGUMENT, "output buffer too small");
        std::memcpy(buffer, text.c_str(), text.size() + 1);
        return LSTCOSEG_OK;
    });
}

lstcoseg_status lstcoseg_saliency_map(int width, int height, const uint8_t* rgb, int passes, uint8_t* out)
{
    if (!rgb || !out) return fail(LSTCOSEG_ERR_ARGUMENT, "null argument");
    if (width <= 0 || height <= 0) return fail(LSTCOSEG_ERR_DATA, "image dimensions must be positive");
    return guarded([&] {
        const size_t n = static_cast<size_t>(width) * static_cast<size_t>(height);
        const lstcoseg::Image im = lstcoseg::Image::from_rgb8("saliency", width, height, {rgb, 3 * n});
        const lstcoseg::SaliencyMap map = lstcoseg::mbd_saliency(im, passes);
        for (size_t i = 0; i < n; ++i) out[i] = static_cast<uint8_t>(std::lround(map.data[i] * 255.0));
        return LSTCOSEG_OK;
    });
}

lstcoseg_status lstcoseg_score(int width, int height, const uint8_t* pred, const uint8_t* gt, lstcoseg_eval_record* out)
{
    if (!pred || !gt || !out) return fail(LSTCOSEG_ERR_ARGUMENT, "null argument");
    if (width <= 0 || height <= 0) return fail(LSTCOSEG_ERR_DATA, "mask dimensions must be positive");
    return guarded([&] {
        lstcoseg::BinaryMask p(width, height, 0);
        lstcoseg::BinaryMask g(width, height, 0);
        for (size_t i = 0; i < p.size(); ++i) {
            p.data[i] = pred[i] ? 1 : 0;
            g.data[i] = gt[i] ? 1 : 0;
        }
        const lstcoseg::EvalRecord r = lstcoseg::score(p, g);
        *out = {r.acc, r.iou, r.tp, r.fp, r.fn, r.tn};
        return LSTCOSEG_OK;
    });
}

lstcoseg_status lstcoseg_aggregate(const lstcoseg_eval_record* records, size_t count, double* mean_acc, double* mean_iou)
{
    if (!mean_acc || !mean_iou || (!records && count > 0)) return fail(LSTCOSEG_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        std::vector<lstcoseg::EvalRecord> rs(count);
        for (size_t i = 0; i < count; ++i) {
            rs[i].acc = records[i].acc;
            rs[i].iou = records[i].iou;
        }
        const lstcoseg::EvalSummary s = lstcoseg::aggregate(rs);
        *mean_acc = s.mean_acc;
        *mean_iou = s.mean_iou;
        return LSTCOSEG_OK;
    });
}

}  // extern "C"
