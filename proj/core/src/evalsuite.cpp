#include "lumen/evalsuite.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>

#include <json.hpp>

#include "lumen/metrics.hpp"
#include "lumen/models.hpp"
#include "lumen/pfm.hpp"
#include "lumen/shfit.hpp"
#include "lumen/sphharm.hpp"

namespace fs = std::filesystem;
using njson = nlohmann::ordered_json;

namespace lumen {

std::uint64_t file_fnv1a64(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot open " + path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    return h;
}

namespace {

struct MethodSpec {
    enum Kind { predictor, sh, mean, oracle } kind = oracle;
    int degree = 5;
    std::string label;
};

MethodSpec parse_method(const std::string &s) {
    MethodSpec ms;
    ms.label = s;
    if (s == "predictor") {
        ms.kind = MethodSpec::predictor;
    } else if (s == "mean") {
        ms.kind = MethodSpec::mean;
    } else if (s == "oracle") {
        ms.kind = MethodSpec::oracle;
    } else if (s == "sh" || s.rfind("sh:", 0) == 0) {
        ms.kind = MethodSpec::sh;
        if (s.size() > 3) {
            try {
                std::size_t used = 0;
                ms.degree = std::stoi(s.substr(3), &used);
                if (used != s.size() - 3) throw std::invalid_argument("");
            } catch (const std::exception &) {
                throw ConfigError("bad SH method spec '" + s + "' (want sh:<degree>)");
            }
        }
        if (ms.degree < 0 || ms.degree > 64)
            throw ConfigError("SH degree " + std::to_string(ms.degree) + " out of range");
    } else {
        throw ConfigError("unknown eval method '" + s + "'");
    }
    return ms;
}

}  // namespace

EvalReport eval_suite(const ObsManifest &m, const std::string &obs_dir, const EvalConfig &cfg) {
    if (cfg.methods.empty()) throw ConfigError("eval_suite: no methods requested");
    std::vector<MethodSpec> methods;
    for (const std::string &s : cfg.methods) methods.push_back(parse_method(s));
    const bool want_predictor = std::any_of(methods.begin(), methods.end(), [](auto &ms) {
        return ms.kind == MethodSpec::predictor;
    });
    const bool want_mean = std::any_of(methods.begin(), methods.end(), [](auto &ms) {
        return ms.kind == MethodSpec::mean;
    });
    if (want_predictor && (cfg.ae_path.empty() || cfg.ip_path.empty()))
        throw ConfigError("eval_suite: the predictor method needs --ae and --ip checkpoints");
    if (cfg.relight_size < 4) throw ConfigError("eval_suite: relight_size must be >= 4");

    const auto test_rows = rows_with_split(m, cfg.split);
    if (test_rows.empty())
        throw DatasetError(std::string("eval_suite: no rows in split '") +
                           split_name(cfg.split) + "'");

    EvalReport rep;
    rep.object = m.object;
    rep.split = split_name(cfg.split);
    rep.methods = cfg.methods;
    rep.lambda = cfg.lambda;
    rep.dataset_seed = m.seed;
    rep.relight_size = cfg.relight_size;

    // Ground-truth envmaps (rotated panoramas), loaded once.
    std::vector<EnvMap> truth(test_rows.size());
    parallel_for(0, static_cast<std::int64_t>(test_rows.size()), cfg.n_threads,
                 [&](std::int64_t i) {
                     truth[static_cast<std::size_t>(i)] =
                         load_row_envmap(m, obs_dir, test_rows[static_cast<std::size_t>(i)]);
                 });
    const SolidAngleMap w = solid_angle_weights(m.env_height, m.env_width);
    const NormalMap relight_nm = sphere_normal_map(cfg.relight_size);
    const Brdf relight_brdf = material_brdf("diffuse");

    // Object geometry, shared by every row of the manifest.
    const NormalMap obj_nm = normal_map_from_image(
        read_pfm((fs::path(obs_dir) / m.rows[test_rows[0]].normals).string()));

    EnvMap train_mean;
    if (want_mean) {
        const auto train = rows_with_split(m, Split::train);
        if (train.empty())
            throw DatasetError("eval_suite: 'mean' method needs training rows in the manifest");
        std::vector<double> acc(static_cast<std::size_t>(m.env_height) * m.env_width * 3, 0.0);
        for (std::size_t r : train) {
            EnvMap e = load_row_envmap(m, obs_dir, r);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += e.data[i];
        }
        train_mean = EnvMap(m.env_height, m.env_width);
        for (std::size_t i = 0; i < acc.size(); ++i)
            train_mean.data[i] = static_cast<float>(acc[i] / static_cast<double>(train.size()));
    }

    std::optional<Autoencoder> ae;
    std::optional<Predictor> ip;
    if (want_predictor) {
        ae = load_autoencoder(cfg.ae_path);
        ip = load_predictor(cfg.ip_path);
        if (ae->cfg.height != m.env_height || ae->cfg.width != m.env_width)
            throw ConfigError("eval_suite: autoencoder is " + std::to_string(ae->cfg.height) +
                              "x" + std::to_string(ae->cfg.width) + " but the dataset is " +
                              std::to_string(m.env_height) + "x" + std::to_string(m.env_width));
        if (ip->cfg.obs_size != m.size)
            throw ConfigError("eval_suite: predictor expects " +
                              std::to_string(ip->cfg.obs_size) + "px observations, dataset has " +
                              std::to_string(m.size) + "px");
        if (ip->cfg.z != ae->cfg.z)
            throw ConfigError("eval_suite: predictor z = " + std::to_string(ip->cfg.z) +
                              " vs autoencoder z = " + std::to_string(ae->cfg.z));
        rep.ae_path = cfg.ae_path;
        rep.ip_path = cfg.ip_path;
        rep.ae_hash = file_fnv1a64(cfg.ae_path);
        rep.ip_hash = file_fnv1a64(cfg.ip_path);
    }

    // Materials in order of first appearance within the split.
    std::vector<std::string> materials;
    for (std::size_t t : test_rows) {
        const std::string &mat = m.rows[t].material;
        if (std::find(materials.begin(), materials.end(), mat) == materials.end())
            materials.push_back(mat);
    }

    // Transport and design matrices are shared across items of a material.
    std::map<std::string, TransportMatrix> transports;
    std::map<std::pair<std::string, int>, Eigen::MatrixXd> designs;

    auto score = [&](const EnvMap &pred, std::size_t ti) {
        EvalItem it;
        it.row = test_rows[ti];
        const EnvMap &gt = truth[ti];
        it.rmse = rmse(pred, gt, w);
        SiRmseResult si = si_rmse(pred, gt, w);
        it.si_rmse = si.value;
        it.alpha = si.alpha;
        it.mae = mae(pred, gt, w);
        it.mre = mre(pred, gt, w);
        it.relight_rmse = relight_error(pred, gt, relight_nm, relight_brdf);
        return it;
    };

    for (const MethodSpec &ms : methods) {
        for (const std::string &mat : materials) {
            std::vector<std::size_t> sel;  // indices into test_rows/truth
            for (std::size_t ti = 0; ti < test_rows.size(); ++ti)
                if (m.rows[test_rows[ti]].material == mat) sel.push_back(ti);
            if (sel.empty()) continue;

            EvalRow row;
            row.object = m.object;
            row.material = mat;
            row.method = ms.label;
            row.items.resize(sel.size());

            switch (ms.kind) {
                case MethodSpec::oracle:
                    parallel_for(0, static_cast<std::int64_t>(sel.size()), cfg.n_threads,
                                 [&](std::int64_t i) {
                                     std::size_t ti = sel[static_cast<std::size_t>(i)];
                                     row.items[static_cast<std::size_t>(i)] =
                                         score(truth[ti], ti);
                                 });
                    break;
                case MethodSpec::mean:
                    parallel_for(0, static_cast<std::int64_t>(sel.size()), cfg.n_threads,
                                 [&](std::int64_t i) {
                                     row.items[static_cast<std::size_t>(i)] =
                                         score(train_mean, sel[static_cast<std::size_t>(i)]);
                                 });
                    break;
                case MethodSpec::sh: {
                    const Brdf brdf = material_brdf(mat);
                    if (!transports.count(mat))
                        transports.emplace(mat, build_transport(obj_nm, brdf, m.env_height,
                                                                m.env_width, 512u << 20,
                                                                cfg.n_threads));
                    const TransportMatrix &t = transports.at(mat);
                    auto dkey = std::make_pair(mat, ms.degree);
                    if (!designs.count(dkey))
                        designs.emplace(dkey, build_design_matrix(t, ms.degree));
                    const Eigen::MatrixXd &A = designs.at(dkey);
                    FitConfig fc;
                    fc.degree = ms.degree;
                    fc.lambda = cfg.lambda;
                    parallel_for(0, static_cast<std::int64_t>(sel.size()), cfg.n_threads,
                                 [&](std::int64_t i) {
                                     std::size_t ti = sel[static_cast<std::size_t>(i)];
                                     Image3 img = render_direct(obj_nm, brdf, truth[ti]);
                                     FitResult fr = fit_sh(img, t, A, fc);
                                     EnvMap pred = reconstruct_clamped(fr.coeffs, m.env_height,
                                                                       m.env_width);
                                     row.items[static_cast<std::size_t>(i)] = score(pred, ti);
                                 });
                    break;
                }
                case MethodSpec::predictor:
                    // Serial: network forward passes mutate layer caches.
                    for (std::size_t i = 0; i < sel.size(); ++i) {
                        std::size_t ti = sel[i];
                        ObjectObservation obs = load_observation(m, obs_dir, test_rows[ti]);
                        EnvMap pred = predict_envmap(*ip, *ae, obs);
                        row.items[i] = score(pred, ti);
                    }
                    break;
            }

            for (const EvalItem &it : row.items) {
                row.rmse += it.rmse;
                row.si_rmse += it.si_rmse;
                row.mae += it.mae;
                row.mre += it.mre;
                row.relight_rmse += it.relight_rmse;
                row.alpha += it.alpha;
            }
            const double k = static_cast<double>(row.items.size());
            row.rmse /= k;
            row.si_rmse /= k;
            row.mae /= k;
            row.mre /= k;
            row.relight_rmse /= k;
            row.alpha /= k;
            rep.rows.push_back(std::move(row));
        }
    }
    return rep;
}

void write_eval_csv(const EvalReport &r, const std::string &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write " + path);
    out << "object,material,method,rmse,si_rmse,mae,mre,relight_rmse,alpha\n";
    for (const EvalRow &row : r.rows) {
        char buf[256];
        std::snprintf(buf, sizeof buf, ",%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n", row.rmse, row.si_rmse,
                      row.mae, row.mre, row.relight_rmse, row.alpha);
        out << row.object << ',' << row.material << ',' << row.method << buf;
    }
    if (!out) throw ResourceError("short write on " + path);
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

void write_eval_json(const EvalReport &r, const std::string &path) {
    njson j;
    j["kind"] = "eval";
    j["object"] = r.object;
    j["split"] = r.split;
    j["methods"] = r.methods;
    j["lambda"] = r.lambda;
    j["dataset_seed"] = r.dataset_seed;
    njson cks = njson::object();
    if (!r.ae_path.empty())
        cks["ae"] = njson{{"path", r.ae_path}, {"fnv1a64", hex64(r.ae_hash)}};
    if (!r.ip_path.empty())
        cks["ip"] = njson{{"path", r.ip_path}, {"fnv1a64", hex64(r.ip_hash)}};
    j["checkpoints"] = cks;
    j["relight"] = njson{{"object", "sphere"},
                         {"material", "diffuse"},
                         {"size", r.relight_size}};
    njson rows = njson::array();
    for (const EvalRow &row : r.rows) {
        njson jr;
        jr["object"] = row.object;
        jr["material"] = row.material;
        jr["method"] = row.method;
        jr["rmse"] = row.rmse;
        jr["si_rmse"] = row.si_rmse;
        jr["mae"] = row.mae;
        jr["mre"] = row.mre;
        jr["relight_rmse"] = row.relight_rmse;
        jr["alpha"] = row.alpha;
        njson items = njson::array();
        for (const EvalItem &it : row.items)
            items.push_back(njson{{"row", it.row},
                                  {"rmse", it.rmse},
                                  {"si_rmse", it.si_rmse},
                                  {"mae", it.mae},
                                  {"mre", it.mre},
                                  {"relight_rmse", it.relight_rmse},
                                  {"alpha", it.alpha}});
        jr["items"] = items;
        rows.push_back(std::move(jr));
    }
    j["rows"] = rows;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw ResourceError("short write on " + path);
}

}  // namespace lumen
