// Batch front end: reads a directory of image classes, runs co-segmentation
// per class and writes masks, overlays, soft maps, metrics and a run log.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "lstcoseg/lstcoseg.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

// Carries an exit code and the stage that failed.
class CliError : public std::runtime_error {
public:
    CliError(ExitCode code, std::string stage, const std::string& what)
        : std::runtime_error(what), code_(code), stage_(std::move(stage))
    {
    }
    [[nodiscard]] ExitCode code() const noexcept { return code_; }
    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
    ExitCode code_;
    std::string stage_;
};

ExitCode exit_code_for(lstcoseg_status status)
{
    switch (status) {
    case LSTCOSEG_OK: return kOk;
    case LSTCOSEG_ERR_ARGUMENT: return kUsage;
    case LSTCOSEG_ERR_DATA:
    case LSTCOSEG_ERR_STATE: return kData;
    default: return kInternal;
    }
}

void check(lstcoseg_status status, const std::string& stage)
{
    if (status != LSTCOSEG_OK) throw CliError(exit_code_for(status), stage, lstcoseg_last_error());
}

struct ConfigDeleter {
    void operator()(lstcoseg_config* c) const { lstcoseg_config_destroy(c); }
};
struct SessionDeleter {
    void operator()(lstcoseg_session* s) const { lstcoseg_session_destroy(s); }
};
struct ResultDeleter {
    void operator()(lstcoseg_result* r) const { lstcoseg_result_destroy(r); }
};
using ConfigHandle = std::unique_ptr<lstcoseg_config, ConfigDeleter>;
using SessionHandle = std::unique_ptr<lstcoseg_session, SessionDeleter>;
using ResultHandle = std::unique_ptr<lstcoseg_result, ResultDeleter>;

// Command-line values; unset optionals keep the library defaults.
struct Options {
    fs::path data;
    fs::path out;
    fs::path pred;
    fs::path metrics;
    std::vector<std::string> classes;

    std::optional<double> alpha;
    std::optional<double> lambda;
    std::vector<int> scales;
    std::optional<int> gmm_components;
    std::optional<int> outer_iterations;
    std::optional<double> diffusion_tol;
    std::optional<int> diffusion_max_sweeps;
    std::string color_models = "joint";
    bool no_transfer = false;
    bool single_scale = false;
    std::string saliency_source = "builtin";
    fs::path saliency_dir;
    bool saliency_cut = false;
    std::optional<int> saliency_passes;
    std::optional<double> saliency_factor;
    std::optional<double> pairwise_gamma;
    std::optional<int> gmm_max_samples;
    std::uint64_t seed = 0;
    int threads = 0;
    int max_dim = 0;
    int group_size = 0;
    bool quiet = false;
};

void log(const Options& o, const std::string& message)
{
    if (!o.quiet) std::cerr << message << '\n';
}

const std::set<std::string> kImageExtensions{".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".ppm", ".pgm"};

bool is_image(const fs::path& p)
{
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return fs::is_regular_file(p) && kImageExtensions.contains(ext);
}

// Stem -> file, sorted by stem.
std::map<std::string, fs::path> images_in(const fs::path& dir)
{
    std::map<std::string, fs::path> found;
    if (!fs::is_directory(dir)) return found;
    for (const auto& entry : fs::directory_iterator(dir))
        if (is_image(entry.path())) found.emplace(entry.path().stem().string(), entry.path());
    return found;
}

struct ClassDir {
    std::string name;
    fs::path dir;
};

// Class subdirectories of the root, or the root itself when it holds images directly.
std::vector<ClassDir> find_classes(const Options& o)
{
    if (!fs::is_directory(o.data))
        throw CliError(kData, "ingest", "dataset directory not found: " + o.data.string());
    std::vector<ClassDir> classes;
    for (const auto& entry : fs::directory_iterator(o.data)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (name == "groundtruth" || name == "saliency") continue;
        if (!o.classes.empty() && std::find(o.classes.begin(), o.classes.end(), name) == o.classes.end()) continue;
        if (!images_in(entry.path()).empty()) classes.push_back({name, entry.path()});
    }
    if (classes.empty() && !images_in(o.data).empty())
        classes.push_back({fs::absolute(o.data).lexically_normal().filename().string(), o.data});
    std::sort(classes.begin(), classes.end(), [](const ClassDir& a, const ClassDir& b) { return a.name < b.name; });
    for (const std::string& wanted : o.classes)
        if (std::none_of(classes.begin(), classes.end(), [&](const ClassDir& c) { return c.name == wanted; }))
            throw CliError(kData, "ingest", "class not found: " + wanted);
    if (classes.empty()) throw CliError(kData, "ingest", "no images under " + o.data.string());
    return classes;
}

cv::Mat read_color(const fs::path& path)
{
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw CliError(kData, "ingest", "cannot read image " + path.string());
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    return rgb;
}

cv::Mat read_gray(const fs::path& path)
{
    cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (gray.empty()) throw CliError(kData, "ingest", "cannot read map " + path.string());
    return gray;
}

cv::Size working_size(const cv::Size& size, int max_dim)
{
    const int longest = std::max(size.width, size.height);
    if (max_dim <= 0 || longest <= max_dim) return size;
    const double s = static_cast<double>(max_dim) / longest;
    return {std::max(1, static_cast<int>(std::lround(size.width * s))),
            std::max(1, static_cast<int>(std::lround(size.height * s)))};
}

cv::Mat resized(const cv::Mat& m, const cv::Size& size, int interpolation)
{
    if (m.size() == size) return m;
    cv::Mat out;
    cv::resize(m, out, size, 0, 0, interpolation);
    return out;
}

void write_png(const fs::path& path, const cv::Mat& m)
{
    if (!cv::imwrite(path.string(), m)) throw CliError(kInternal, "emit", "cannot write " + path.string());
}

ConfigHandle make_config(const Options& o)
{
    lstcoseg_config* raw = nullptr;
    check(lstcoseg_config_create(&raw), "config");
    ConfigHandle c(raw);
    auto set = [&](lstcoseg_status s) { check(s, "config"); };
    if (o.alpha) set(lstcoseg_config_set_alpha(c.get(), *o.alpha));
    if (o.lambda) set(lstcoseg_config_set_lambda(c.get(), *o.lambda));
    if (o.single_scale) {
        const int one = 48;
        set(lstcoseg_config_set_scales(c.get(), &one, 1));
    } else if (!o.scales.empty()) {
        set(lstcoseg_config_set_scales(c.get(), o.scales.data(), o.scales.size()));
    }
    if (o.gmm_components) set(lstcoseg_config_set_gmm_components(c.get(), *o.gmm_components));
    if (o.outer_iterations) set(lstcoseg_config_set_outer_iterations(c.get(), *o.outer_iterations));
    if (o.diffusion_tol) set(lstcoseg_config_set_diffusion_tol(c.get(), *o.diffusion_tol));
    if (o.diffusion_max_sweeps) set(lstcoseg_config_set_diffusion_max_sweeps(c.get(), *o.diffusion_max_sweeps));
    set(lstcoseg_config_set_joint_color_models(c.get(), o.color_models == "joint"));
    set(lstcoseg_config_set_transfer_enabled(c.get(), !o.no_transfer));
    set(lstcoseg_config_set_external_saliency(c.get(), o.saliency_source == "external"));
    set(lstcoseg_config_set_saliency_cut(c.get(), o.saliency_cut));
    if (o.saliency_passes) set(lstcoseg_config_set_saliency_passes(c.get(), *o.saliency_passes));
    if (o.saliency_factor) set(lstcoseg_config_set_saliency_factor(c.get(), *o.saliency_factor));
    if (o.pairwise_gamma) set(lstcoseg_config_set_pairwise_gamma(c.get(), *o.pairwise_gamma));
    if (o.gmm_max_samples) set(lstcoseg_config_set_gmm_max_samples(c.get(), *o.gmm_max_samples));
    set(lstcoseg_config_set_seed(c.get(), o.seed));
    set(lstcoseg_config_set_threads(c.get(), o.threads));
    set(lstcoseg_config_validate(c.get()));
    return c;
}

// Seeded shuffle into ceil(n / size) groups of near-equal size; one group
// when the class is small enough or grouping is off.
std::vector<std::vector<std::string>> partition(std::vector<std::string> stems, int group_size, std::uint64_t seed)
{
    if (group_size <= 0 || stems.size() <= static_cast<std::size_t>(group_size)) return {stems};
    std::mt19937_64 rng(seed);
    std::shuffle(stems.begin(), stems.end(), rng);
    const std::size_t groups = (stems.size() + group_size - 1) / group_size;
    std::vector<std::vector<std::string>> out(groups);
    for (std::size_t i = 0; i < stems.size(); ++i) out[i % groups].push_back(stems[i]);
    for (auto& g : out) std::sort(g.begin(), g.end());
    return out;
}

// Saliency maps for the class: stem -> file. Stray files are reported.
std::map<std::string, fs::path> matched_side_files(const fs::path& dir, const std::map<std::string, fs::path>& images,
                                                   const std::string& what, json& warnings)
{
    std::map<std::string, fs::path> files = images_in(dir);
    for (auto it = files.begin(); it != files.end();) {
        if (!images.contains(it->first)) {
            warnings.push_back(what + " file without a matching image: " + it->second.string());
            it = files.erase(it);
        } else {
            ++it;
        }
    }
    return files;
}

cv::Mat boundary_overlay(const cv::Mat& rgb, const cv::Mat& mask)
{
    cv::Mat overlay;
    cv::cvtColor(rgb, overlay, cv::COLOR_RGB2BGR);
    std::vector<std::vector<cv::Point>> contours;
    cv::findContours(mask.clone(), contours, cv::RETR_LIST, cv::CHAIN_APPROX_NONE);
    const int thickness = std::max(1, std::max(rgb.cols, rgb.rows) / 200);
    cv::drawContours(overlay, contours, -1, cv::Scalar(0, 255, 0), thickness);
    return overlay;
}

cv::Mat result_plane(const lstcoseg_result* r, std::size_t index,
                     lstcoseg_status (*fetch)(const lstcoseg_result*, size_t, uint8_t*, size_t))
{
    int w = 0, h = 0;
    check(lstcoseg_result_image_size(r, index, &w, &h), "emit");
    cv::Mat plane(h, w, CV_8UC1);
    check(fetch(r, index, plane.data, plane.total()), "emit");
    return plane;
}

json report_of(const lstcoseg_result* r)
{
    size_t length = 0;
    check(lstcoseg_result_report_json(r, nullptr, 0, &length), "emit");
    std::string text(length + 1, '\0');
    check(lstcoseg_result_report_json(r, text.data(), text.size(), &length), "emit");
    text.resize(length);
    return json::parse(text);
}

int run_segment(const Options& o)
{
    ConfigHandle config = make_config(o);
    const std::vector<ClassDir> classes = find_classes(o);
    fs::create_directories(o.out);

    json run;
    run["version"] = lstcoseg_version();
    run["dataset"] = fs::absolute(o.data).string();
    run["max_dim"] = o.max_dim;
    run["group_size"] = o.group_size;
    run["group_seed"] = o.seed;
    run["classes"] = json::array();
    json warnings = json::array();

    for (const ClassDir& cls : classes) {
        const auto images = images_in(cls.dir);
        const fs::path sal_dir = o.saliency_dir.empty() ? cls.dir / "saliency" : o.saliency_dir / cls.name;
        std::map<std::string, fs::path> sal_files;
        if (o.saliency_source == "external") {
            sal_files = matched_side_files(sal_dir, images, "saliency", warnings);
            for (const auto& [stem, path] : images)
                if (!sal_files.contains(stem))
                    throw CliError(kData, "ingest", "no saliency map for " + cls.name + "/" + stem + " in " + sal_dir.string());
        }
        matched_side_files(cls.dir / "groundtruth", images, "ground-truth", warnings);

        std::vector<std::string> stems;
        for (const auto& [stem, path] : images) stems.push_back(stem);
        const auto groups = partition(stems, o.group_size, o.seed);
        const fs::path class_out = o.out / cls.name;
        fs::create_directories(class_out);

        json class_entry{{"name", cls.name}, {"groups", json::array()}};
        for (std::size_t g = 0; g < groups.size(); ++g) {
            log(o, "segmenting " + cls.name + (groups.size() > 1 ? " group " + std::to_string(g + 1) : "") + " (" +
                       std::to_string(groups[g].size()) + " images)");
            lstcoseg_session* raw = nullptr;
            check(lstcoseg_session_create(config.get(), &raw), "session");
            SessionHandle session(raw);

            std::vector<cv::Mat> originals;
            for (std::size_t k = 0; k < groups[g].size(); ++k) {
                const std::string& stem = groups[g][k];
                cv::Mat rgb = read_color(images.at(stem));
                const cv::Size size = working_size(rgb.size(), o.max_dim);
                const cv::Mat work = resized(rgb, size, cv::INTER_AREA);
                const cv::Mat packed = work.isContinuous() ? work : work.clone();
                check(lstcoseg_session_add_image(session.get(), stem.c_str(), packed.cols, packed.rows, packed.data),
                      "ingest");
                if (o.saliency_source == "external") {
                    const cv::Mat map = resized(read_gray(sal_files.at(stem)), size, cv::INTER_LINEAR);
                    const cv::Mat packed_map = map.isContinuous() ? map : map.clone();
                    check(lstcoseg_session_set_saliency(session.get(), k, packed_map.data), "ingest");
                }
                originals.push_back(std::move(rgb));
            }

            lstcoseg_result* result_raw = nullptr;
            check(lstcoseg_session_run(session.get(), &result_raw), "cosegment");
            ResultHandle result(result_raw);

            for (std::size_t k = 0; k < groups[g].size(); ++k) {
                const std::string& stem = groups[g][k];
                const cv::Size full = originals[k].size();
                cv::Mat mask = resized(result_plane(result.get(), k, lstcoseg_result_mask), full, cv::INTER_NEAREST);
                cv::Mat zbar = resized(result_plane(result.get(), k, lstcoseg_result_soft_mask), full, cv::INTER_LINEAR);
                write_png(class_out / (stem + "_mask.png"), mask);
                write_png(class_out / (stem + "_zbar.png"), zbar);
                write_png(class_out / (stem + "_overlay.png"), boundary_overlay(originals[k], mask));
            }

            json report = report_of(result.get());
            if (!run.contains("config")) run["config"] = report["config"];
            report.erase("config");
            for (const auto& w : report["warnings"]) warnings.push_back(cls.name + ": " + w.get<std::string>());
            class_entry["groups"].push_back({{"images", groups[g]}, {"report", std::move(report)}});
        }
        run["classes"].push_back(std::move(class_entry));
    }
    run["warnings"] = warnings;
    for (const auto& w : warnings) log(o, "warning: " + w.get<std::string>());

    std::ofstream(o.out / "run.json") << run.dump(2) << '\n';
    return kOk;
}

cv::Mat binarize(const cv::Mat& gray)
{
    cv::Mat bin;
    cv::threshold(gray, bin, 127, 1, cv::THRESH_BINARY);
    return bin;
}

int run_eval(const Options& o)
{
    const std::vector<ClassDir> classes = find_classes(o);
    if (!fs::is_directory(o.pred)) throw CliError(kData, "eval", "prediction directory not found: " + o.pred.string());
    const fs::path metrics_path = o.metrics.empty() ? o.pred / "metrics.csv" : o.metrics;
    std::ostringstream csv;
    csv << "class,image,acc,iou,tp,fp,fn,tn\n";
    csv.precision(17);
    std::vector<lstcoseg_eval_record> all;
    json warnings = json::array();

    for (const ClassDir& cls : classes) {
        const auto images = images_in(cls.dir);
        const auto truths = matched_side_files(cls.dir / "groundtruth", images, "ground-truth", warnings);
        std::vector<lstcoseg_eval_record> records;
        for (const auto& [stem, gt_path] : truths) {
            const fs::path pred_path = o.pred / cls.name / (stem + "_mask.png");
            if (!fs::exists(pred_path)) {
                warnings.push_back("no prediction for " + cls.name + "/" + stem);
                continue;
            }
            const cv::Mat gt = binarize(read_gray(gt_path));
            const cv::Mat pred = binarize(read_gray(pred_path));
            if (gt.size() != pred.size())
                throw CliError(kData, "eval", "size mismatch between " + pred_path.string() + " and " + gt_path.string());
            const cv::Mat g = gt.isContinuous() ? gt : gt.clone();
            const cv::Mat p = pred.isContinuous() ? pred : pred.clone();
            lstcoseg_eval_record rec{};
            check(lstcoseg_score(p.cols, p.rows, p.data, g.data, &rec), "eval");
            csv << cls.name << ',' << stem << ',' << rec.acc << ',' << rec.iou << ',' << rec.tp << ',' << rec.fp << ','
                << rec.fn << ',' << rec.tn << '\n';
            records.push_back(rec);
        }
        if (records.empty()) {
            warnings.push_back("nothing to score in class " + cls.name);
            continue;
        }
        double acc = 0, iou = 0;
        check(lstcoseg_aggregate(records.data(), records.size(), &acc, &iou), "eval");
        csv << cls.name << ",mean," << acc << ',' << iou << ",,,,\n";
        std::printf("%-24s images %3zu  acc %.4f  iou %.4f\n", cls.name.c_str(), records.size(), acc, iou);
        all.insert(all.end(), records.begin(), records.end());
    }
    for (const auto& w : warnings) log(o, "warning: " + w.get<std::string>());
    if (all.empty()) throw CliError(kData, "eval", "no ground truth matched any prediction");
    double acc = 0, iou = 0;
    check(lstcoseg_aggregate(all.data(), all.size(), &acc, &iou), "eval");
    csv << "all,mean," << acc << ',' << iou << ",,,,\n";
    std::printf("%-24s images %3zu  acc %.4f  iou %.4f\n", "all", all.size(), acc, iou);
    std::ofstream(metrics_path) << csv.str();
    return kOk;
}

int run_saliency(const Options& o)
{
    const int passes = o.saliency_passes.value_or(4);
    const std::vector<ClassDir> classes = find_classes(o);
    for (const ClassDir& cls : classes) {
        const fs::path class_out = o.out / cls.name;
        fs::create_directories(class_out);
        for (const auto& [stem, path] : images_in(cls.dir)) {
            const cv::Mat rgb = read_color(path);
            const cv::Mat work = resized(rgb, working_size(rgb.size(), o.max_dim), cv::INTER_AREA);
            const cv::Mat packed = work.isContinuous() ? work : work.clone();
            cv::Mat map(packed.rows, packed.cols, CV_8UC1);
            check(lstcoseg_saliency_map(packed.cols, packed.rows, packed.data, passes, map.data), "saliency");
            write_png(class_out / (stem + "_saliency.png"), resized(map, rgb.size(), cv::INTER_LINEAR));
        }
        log(o, "saliency maps written for " + cls.name);
    }
    return kOk;
}

void add_config_flags(CLI::App& cmd, Options& o)
{
    cmd.add_option("--alpha", o.alpha, "Weight of the patch reconstruction term");
    cmd.add_option("--lambda", o.lambda, "Coupling between patch labels and masks");
    cmd.add_option("--scales", o.scales, "Patch sides in pixels (each >= 48)")->delimiter(',');
    cmd.add_flag("--single-scale", o.single_scale, "Use 48-pixel patches only");
    cmd.add_option("--gmm-components", o.gmm_components, "Gaussians per color model");
    cmd.add_option("--outer-iterations", o.outer_iterations, "Alternation rounds");
    cmd.add_option("--diffusion-tol", o.diffusion_tol, "Stop diffusion when the largest change drops below this");
    cmd.add_option("--diffusion-max-sweeps", o.diffusion_max_sweeps, "Sweep cap per diffusion");
    cmd.add_option("--color-models", o.color_models, "Pool color models over the class or fit one per image")
        ->check(CLI::IsMember({"joint", "per-image"}));
    cmd.add_flag("--no-transfer", o.no_transfer, "Disable shape transfer between images");
    cmd.add_option("--saliency-source", o.saliency_source, "Initial saliency")
        ->check(CLI::IsMember({"builtin", "external"}));
    cmd.add_option("--saliency-dir", o.saliency_dir, "Root of external maps, laid out <dir>/<class>/<stem>.*");
    cmd.add_flag("--saliency-cut", o.saliency_cut, "Refine the initial masks with one graph cut");
    cmd.add_option("--saliency-factor", o.saliency_factor, "Threshold as a multiple of the mean saliency");
    cmd.add_option("--pairwise-gamma", o.pairwise_gamma, "Smoothness weight");
    cmd.add_option("--gmm-max-samples", o.gmm_max_samples, "Pixel subsample size for EM");
    cmd.add_option("--seed", o.seed, "Seed for color model fitting and group partitioning");
    cmd.add_option("--group-size", o.group_size, "Split classes larger than this into random groups (0 = off)");
}

void add_common_flags(CLI::App& cmd, Options& o)
{
    cmd.add_option("--data", o.data, "Dataset root (one subdirectory per class)")->required();
    cmd.add_option("--classes", o.classes, "Restrict to these classes")->delimiter(',');
    cmd.add_option("--max-dim", o.max_dim, "Downscale so the longer side is at most this (0 = off)")
        ->check(CLI::NonNegativeNumber);
    cmd.add_option("--threads", o.threads, "Worker cap (0 = all cores)")->check(CLI::NonNegativeNumber);
    cmd.add_flag("-q,--quiet", o.quiet, "Only report errors");
}

}  // namespace

int main(int argc, char** argv)
{
    Options o;
    CLI::App app{"Co-segmentation of image classes by local shape transfer"};
    app.set_version_flag("--version", std::string(lstcoseg_version()));
    app.require_subcommand(1);

    CLI::App* segment = app.add_subcommand("segment", "Segment every class and write masks, overlays and run.json");
    add_common_flags(*segment, o);
    add_config_flags(*segment, o);
    segment->add_option("--out", o.out, "Output directory")->required();
    segment->add_option("--saliency-passes", o.saliency_passes, "Raster passes of the builtin saliency");

    CLI::App* eval = app.add_subcommand("eval", "Score masks against ground truth and write metrics.csv");
    add_common_flags(*eval, o);
    eval->add_option("--pred", o.pred, "Directory written by segment")->required();
    eval->add_option("--metrics", o.metrics, "CSV path (default <pred>/metrics.csv)");

    CLI::App* saliency = app.add_subcommand("saliency", "Write the builtin saliency maps");
    add_common_flags(*saliency, o);
    saliency->add_option("--out", o.out, "Output directory")->required();
    saliency->add_option("--passes", o.saliency_passes, "Raster passes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (segment->parsed()) return run_segment(o);
        if (eval->parsed()) return run_eval(o);
        return run_saliency(o);
    } catch (const CliError& e) {
        std::cerr << "error [" << e.stage() << "]: " << e.what() << '\n';
        return e.code();
    } catch (const cv::Exception& e) {
        std::cerr << "error [io]: " << e.what() << '\n';
        return kData;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error [io]: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error [internal]: " << e.what() << '\n';
        return kInternal;
    }
}
