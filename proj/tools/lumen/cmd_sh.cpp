#include <filesystem>
#include <fstream>
#include <memory>

#include "cli_util.hpp"
#include "commands.hpp"
#include "lumen/manifest.hpp"
#include "lumen/pfm.hpp"
#include "lumen/png.hpp"
#include "lumen/render.hpp"
#include "lumen/shfit.hpp"
#include "lumen/sphharm.hpp"

namespace fs = std::filesystem;

namespace lumen::cli {

namespace {

std::string record_dir(const std::string &out_file) {
    std::string d = fs::path(out_file).parent_path().string();
    return d.empty() ? std::string(".") : d;
}

// --- project-sh ------------------------------------------------------------

struct ProjectShOpts {
    std::string envmap, out;
    int degree = 5;
};

void run_project_sh(const ProjectShOpts &o) {
    SHCoeffs c = project(read_pfm(o.envmap), o.degree);
    write_sh(c, o.out);

    RunRecord rec;
    rec.subcommand = "project-sh";
    rec.config = {{"envmap", o.envmap}, {"degree", o.degree}, {"out", o.out}};
    rec.add_artifact(fs::path(o.out).filename().string());
    rec.write(record_dir(o.out));
}

// --- fit-sh ----------------------------------------------------------------

struct FitShOpts {
    std::string rgb;
    std::string object = "sphere";
    std::string material = "diffuse";
    int degree = 5;
    double lambda = -1.0;
    int env_height = 32;
    std::string solver = "cholesky";
    std::string out, json_out;
    int threads = 1;
};

void run_fit_sh(const FitShOpts &o) {
    Image3 img = read_pfm(o.rgb);
    NormalMap nm = object_normal_map(o.object, img.height);
    Brdf brdf = material_brdf(o.material);
    TransportMatrix t =
        build_transport(nm, brdf, o.env_height, 2 * o.env_height, 512u << 20, o.threads);

    FitConfig fc;
    fc.degree = o.degree;
    fc.lambda = o.lambda;
    fc.solver = o.solver == "svd" ? FitSolver::svd : FitSolver::cholesky;
    FitResult r = fit_sh(img, t, fc);
    write_sh(r.coeffs, o.out);

    std::string json_out = o.json_out.empty() ? o.out + ".json" : o.json_out;
    njson j = {{"degree", o.degree},
               {"lambda", r.lambda_used},
               {"residual", {r.residual[0], r.residual[1], r.residual[2]}},
               {"seconds", r.seconds}};
    std::ofstream f(json_out);
    f << j.dump(2) << '\n';
    if (!f) throw ResourceError("fit-sh: cannot write '" + json_out + "'");

    RunRecord rec;
    rec.subcommand = "fit-sh";
    rec.config = {{"rgb", o.rgb},           {"object", o.object},
                  {"material", o.material}, {"degree", o.degree},
                  {"lambda", o.lambda},     {"env-height", o.env_height},
                  {"solver", o.solver},     {"out", o.out},
                  {"json", json_out},       {"threads", o.threads}};
    rec.add_artifact(fs::path(o.out).filename().string());
    rec.add_artifact(json_out, json_out);
    rec.write(record_dir(o.out));
}

// --- relight ---------------------------------------------------------------

struct RelightOpts {
    std::string envmap;
    std::string object = "sphere";
    std::string material = "diffuse";
    int size = 128;
    double gamma = 1.4;
    std::string out;
    int threads = 1;
};

void run_relight(const RelightOpts &o) {
    EnvMap e = read_pfm(o.envmap);
    NormalMap nm = object_normal_map(o.object, o.size);
    Image3 img = render_direct(nm, material_brdf(o.material), e, o.threads);
    std::vector<std::uint8_t> bytes = tonemap_display(reexpose_ldr(img), o.gamma);
    write_png(bytes, o.size, o.size, o.out);

    RunRecord rec;
    rec.subcommand = "relight";
    rec.config = {{"envmap", o.envmap}, {"object", o.object}, {"material", o.material},
                  {"size", o.size},     {"gamma", o.gamma},   {"out", o.out},
                  {"threads", o.threads}};
    rec.add_artifact(fs::path(o.out).filename().string());
    rec.write(record_dir(o.out));
}

}  // namespace

void register_sh_commands(CLI::App &app) {
    {
        auto o = std::make_shared<ProjectShOpts>();
        CLI::App *c = app.add_subcommand("project-sh", "Project an envmap onto SH coefficients");
        add_config_option(c);
        c->add_option("--envmap", o->envmap, "Input envmap PFM")->required()
            ->check(CLI::ExistingFile);
        c->add_option("--degree", o->degree, "SH degree L")->capture_default_str()
            ->check(CLI::NonNegativeNumber);
        c->add_option("--out", o->out, "Output SH text file")->required();
        c->callback([o] { run_project_sh(*o); });
    }
    {
        auto o = std::make_shared<FitShOpts>();
        CLI::App *c = app.add_subcommand(
            "fit-sh", "Recover SH lighting from a rendered image by least squares");
        add_config_option(c);
        c->add_option("--rgb", o->rgb, "Rendered image PFM")->required()
            ->check(CLI::ExistingFile);
        c->add_option("--object", o->object,
                      "Object spec: sphere | spiky[:amp:freq] | normal-map PFM path")
            ->capture_default_str();
        c->add_option("--material", o->material, "Material name")->capture_default_str();
        c->add_option("--degree", o->degree, "SH degree L")->capture_default_str()
            ->check(CLI::NonNegativeNumber);
        c->add_option("--lambda", o->lambda,
                      "Ridge strength (negative = solver default)")->capture_default_str();
        c->add_option("--env-height", o->env_height, "Envmap rows of the transport grid")
            ->capture_default_str()->check(CLI::PositiveNumber);
        c->add_option("--solver", o->solver, "Normal-equations solver")
            ->capture_default_str()->check(CLI::IsMember({"cholesky", "svd"}));
        c->add_option("--out", o->out, "Output SH text file")->required();
        c->add_option("--json", o->json_out, "Fit record path (default: <out>.json)");
        add_threads_option(c, o->threads);
        c->callback([o] { run_fit_sh(*o); });
    }
    {
        auto o = std::make_shared<RelightOpts>();
        CLI::App *c = app.add_subcommand("relight",
                                         "Render an object under an envmap to a display PNG");
        add_config_option(c);
        c->add_option("--envmap", o->envmap, "Input envmap PFM")->required()
            ->check(CLI::ExistingFile);
        c->add_option("--object", o->object,
                      "Object spec: sphere | spiky[:amp:freq] | normal-map PFM path")
            ->capture_default_str();
        c->add_option("--material", o->material, "Material name")->capture_default_str();
        c->add_option("--size", o->size, "Render resolution in pixels")
            ->capture_default_str()->check(CLI::PositiveNumber);
        c->add_option("--gamma", o->gamma, "Display gamma")->capture_default_str();
        c->add_option("--out", o->out, "Output PNG")->required();
        add_threads_option(c, o->threads);
        c->callback([o] { run_relight(*o); });
    }
}

}  // namespace lumen::cli
