#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lstcoseg/lstcoseg.h"

namespace {

struct ConfigDeleter {
    void operator()(lstcoseg_config* c) const { lstcoseg_config_destroy(c); }
};
struct SessionDeleter {
    void operator()(lstcoseg_session* s) const { lstcoseg_session_destroy(s); }
};
struct ResultDeleter {
    void operator()(lstcoseg_result* r) const { lstcoseg_result_destroy(r); }
};
using ConfigPtr = std::unique_ptr<lstcoseg_config, ConfigDeleter>;
using SessionPtr = std::unique_ptr<lstcoseg_session, SessionDeleter>;
using ResultPtr = std::unique_ptr<lstcoseg_result, ResultDeleter>;

ConfigPtr quick_config()
{
    lstcoseg_config* raw = nullptr;
    EXPECT_EQ(lstcoseg_config_create(&raw), LSTCOSEG_OK);
    ConfigPtr c(raw);
    const int scales[] = {48, 72};
    EXPECT_EQ(lstcoseg_config_set_scales(c.get(), scales, 2), LSTCOSEG_OK);
    EXPECT_EQ(lstcoseg_config_set_gmm_components(c.get(), 3), LSTCOSEG_OK);
    EXPECT_EQ(lstcoseg_config_set_outer_iterations(c.get(), 2), LSTCOSEG_OK);
    return c;
}

// Bright square on a dark background.
std::vector<std::uint8_t> square_image(int w, int h, int x0, int y0, int side, std::uint8_t bg)
{
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w * h * 3), bg);
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) {
            std::uint8_t* p = &rgb[(y * w + x) * 3];
            p[0] = 240;
            p[1] = 200;
            p[2] = 30;
        }
    return rgb;
}

}  // namespace

TEST(CApi, VersionAndErrors)
{
    EXPECT_STRNE(lstcoseg_version(), "");
    EXPECT_EQ(lstcoseg_config_create(nullptr), LSTCOSEG_ERR_ARGUMENT);
    EXPECT_STRNE(lstcoseg_last_error(), "");
}

TEST(CApi, SettersRejectInvalidValues)
{
    ConfigPtr c = quick_config();
    EXPECT_EQ(lstcoseg_config_set_alpha(c.get(), -1.0), LSTCOSEG_ERR_ARGUMENT);
    EXPECT_EQ(lstcoseg_config_set_lambda(c.get(), 0.0), LSTCOSEG_ERR_ARGUMENT);
    EXPECT_EQ(lstcoseg_config_set_alpha(c.get(), NAN), LSTCOSEG_ERR_ARGUMENT);
    const int bad[] = {20};
    EXPECT_EQ(lstcoseg_config_set_scales(c.get(), bad, 1), LSTCOSEG_ERR_ARGUMENT);
    EXPECT_EQ(lstcoseg_config_set_scales(c.get(), nullptr, 2), LSTCOSEG_ERR_ARGUMENT);
    EXPECT_EQ(lstcoseg_config_validate(c.get()), LSTCOSEG_OK);
    EXPECT_EQ(lstcoseg_config_set_alpha(c.get(), 2.0), LSTCOSEG_OK);
    EXPECT_EQ(lstcoseg_config_set_seed(c.get(), 99), LSTCOSEG_OK);
}

TEST(CApi, SessionRunAndResults)
{
    ConfigPtr c = quick_config();
    lstcoseg_session* raw = nullptr;
    ASSERT_EQ(lstcoseg_session_create(c.get(), &raw), LSTCOSEG_OK);
    SessionPtr s(raw);

    lstcoseg_result* none = nullptr;
    EXPECT_EQ(lstcoseg_session_run(s.get(), &none), LSTCOSEG_ERR_STATE);

    const int w = 100, h = 80;
    const auto a = square_image(w, h, 30, 20, 36, 20);
    const auto b = square_image(w, h, 50, 30, 36, 60);
    ASSERT_EQ(lstcoseg_session_add_image(s.get(), "a", w, h, a.data()), LSTCOSEG_OK);
    ASSERT_EQ(lstcoseg_session_add_image(s.get(), "b", w, h, b.data()), LSTCOSEG_OK);
    EXPECT_EQ(lstcoseg_session_add_image(s.get(), "bad", 0, h, a.data()), LSTCOSEG_ERR_DATA);
    size_t count = 0;
    EXPECT_EQ(lstcoseg_session_image_count(s.get(), &count), LSTCOSEG_OK);
    EXPECT_EQ(count, 2u);

    lstcoseg_result* rr = nullptr;
    ASSERT_EQ(lstcoseg_session_run(s.get(), &rr), LSTCOSEG_OK) << lstcoseg_last_error();
    ResultPtr r(rr);
    EXPECT_EQ(lstcoseg_result_image_count(r.get(), &count), LSTCOSEG_OK);
    EXPECT_EQ(count, 2u);
    int rw = 0, rh = 0;
    EXPECT_EQ(lstcoseg_result_image_size(r.get(), 1, &rw, &rh), LSTCOSEG_OK);
    EXPECT_EQ(rw, w);
    EXPECT_EQ(rh, h);

    std::vector<std::uint8_t> mask(w * h);
    EXPECT_EQ(lstcoseg_result_mask(r.get(), 0, mask.data(), 10), LSTCOSEG_ERR_ARGUMENT);
    ASSERT_EQ(lstcoseg_result_mask(r.get(), 0, mask.data(), mask.size()), LSTCOSEG_OK);
    for (std::uint8_t v : mask) EXPECT_TRUE(v == 0 || v == 255);
    EXPECT_EQ(mask[(40 * w) + 48], 255);  // square center
    EXPECT_EQ(mask[0], 0);
    EXPECT_EQ(lstcoseg_result_initial_mask(r.get(), 0, mask.data(), mask.size()), LSTCOSEG_OK);
    EXPECT_EQ(lstcoseg_result_soft_mask(r.get(), 1, mask.data(), mask.size()), LSTCOSEG_OK);
    EXPECT_EQ(lstcoseg_result_mask(r.get(), 5, mask.data(), mask.size()), LSTCOSEG_ERR_ARGUMENT);

    size_t length = 0;
    ASSERT_EQ(lstcoseg_result_report_json(r.get(), nullptr, 0, &length), LSTCOSEG_OK);
    std::string text(length + 1, '\0');
    EXPECT_EQ(lstcoseg_result_report_json(r.get(), text.data(), 4, &length), LSTCOSEG_ERR_ARGUMENT);
    ASSERT_EQ(lstcoseg_result_report_json(r.get(), text.data(), text.size(), &length), LSTCOSEG_OK);
    text.resize(length);
    const auto report = nlohmann::json::parse(text);
    EXPECT_EQ(report["config"]["scales"], nlohmann::json({48, 72}));
    EXPECT_EQ(report["energy_trace"].size(), 2u);
    EXPECT_EQ(report["images"].size(), 2u);
    EXPECT_TRUE(report["transfer_active"].get<bool>());
}

TEST(CApi, ExternalSaliencyRequiresMaps)
{
    ConfigPtr c = quick_config();
    ASSERT_EQ(lstcoseg_config_set_external_saliency(c.get(), 1), LSTCOSEG_OK);
    lstcoseg_session* raw = nullptr;
    ASSERT_EQ(lstcoseg_session_create(c.get(), &raw), LSTCOSEG_OK);
    SessionPtr s(raw);
    const auto a = square_image(64, 64, 16, 16, 30, 10);
    ASSERT_EQ(lstcoseg_session_add_image(s.get(), "a", 64, 64, a.data()), LSTCOSEG_OK);
    lstcoseg_result* r = nullptr;
    EXPECT_EQ(lstcoseg_session_run(s.get(), &r), LSTCOSEG_ERR_STATE);

    std::vector<std::uint8_t> gray(64 * 64, 0);
    for (int y = 16; y < 46; ++y)
        for (int x = 16; x < 46; ++x) gray[y * 64 + x] = 255;
    EXPECT_EQ(lstcoseg_session_set_saliency(s.get(), 3, gray.data()), LSTCOSEG_ERR_ARGUMENT);
    ASSERT_EQ(lstcoseg_session_set_saliency(s.get(), 0, gray.data()), LSTCOSEG_OK);
    ASSERT_EQ(lstcoseg_session_run(s.get(), &r), LSTCOSEG_OK) << lstcoseg_last_error();
    ResultPtr owned(r);
    std::vector<std::uint8_t> init(64 * 64);
    ASSERT_EQ(lstcoseg_result_initial_mask(r, 0, init.data(), init.size()), LSTCOSEG_OK);
    EXPECT_EQ(init, gray);
}

TEST(CApi, SmallImageIsDataError)
{
    ConfigPtr c = quick_config();
    lstcoseg_session* raw = nullptr;
    ASSERT_EQ(lstcoseg_session_create(c.get(), &raw), LSTCOSEG_OK);
    SessionPtr s(raw);
    const std::vector<std::uint8_t> rgb(30 * 30 * 3, 100);
    ASSERT_EQ(lstcoseg_session_add_image(s.get(), "small", 30, 30, rgb.data()), LSTCOSEG_OK);
    lstcoseg_result* r = nullptr;
    EXPECT_EQ(lstcoseg_session_run(s.get(), &r), LSTCOSEG_ERR_DATA);
    EXPECT_NE(std::string(lstcoseg_last_error()).find("48"), std::string::npos);
}

TEST(CApi, StandaloneOperations)
{
    const auto img = square_image(40, 40, 10, 10, 20, 0);
    std::vector<std::uint8_t> sal(40 * 40);
    ASSERT_EQ(lstcoseg_saliency_map(40, 40, img.data(), 4, sal.data()), LSTCOSEG_OK);
    EXPECT_EQ(sal[20 * 40 + 20], 255);
    EXPECT_EQ(sal[0], 0);
    EXPECT_EQ(lstcoseg_saliency_map(40, 40, img.data(), 1, sal.data()), LSTCOSEG_ERR_DATA);

    const std::uint8_t pred[] = {255, 255, 0, 0};
    const std::uint8_t gt[] = {1, 0, 1, 0};
    lstcoseg_eval_record rec{};
    ASSERT_EQ(lstcoseg_score(2, 2, pred, gt, &rec), LSTCOSEG_OK);
    EXPECT_EQ(rec.acc, 0.5);
    EXPECT_EQ(rec.iou, 1.0 / 3.0);
    EXPECT_EQ(rec.tp, 1u);

    const lstcoseg_eval_record recs[] = {{1.0, 0.2, 0, 0, 0, 0}, {0.5, 0.4, 0, 0, 0, 0}};
    double acc = 0, iou = 0;
    ASSERT_EQ(lstcoseg_aggregate(recs, 2, &acc, &iou), LSTCOSEG_OK);
    EXPECT_EQ(acc, 0.75);
    EXPECT_NEAR(iou, 0.3, 1e-15);
    EXPECT_EQ(lstcoseg_aggregate(recs, 0, &acc, &iou), LSTCOSEG_ERR_DATA);
}
