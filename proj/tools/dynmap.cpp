// Command-line interface for the dynamic appearance map library.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dynmap/applications.hpp"
#include "dynmap/baselines.hpp"
#include "dynmap/evaluation.hpp"
#include "dynmap/model.hpp"
#include "dynmap/synth.hpp"

using namespace dynmap;

namespace {

Dims parse_dims(const std::string& spec) {
    Dims dims;
    if (std::sscanf(spec.c_str(), "%zu,%zu,%zu", &dims.overhead, &dims.places, &dims.transient) != 3) {
        throw ValidationError("--dims expects D,P,A");
    }
    return dims;
}

std::vector<double> parse_double_list(const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

AttributeSelector parse_attribute(const std::string& spec) {
    AttributeSelector sel;
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw ValidationError("--attribute expects transient:IDX or places:IDX");
    const std::string kind = spec.substr(0, colon);
    if (kind == "transient") sel.transient = true;
    else if (kind == "places") sel.transient = false;
    else throw ValidationError("--attribute kind must be 'transient' or 'places'");
    sel.index = std::stoul(spec.substr(colon + 1));
    return sel;
}

void print_metrics(const std::string& model_name, const Dataset& test,
                   const std::vector<AttributePrediction>& preds) {
    std::vector<std::vector<double>> places_p, places_t, trans_p, trans_t;
    for (size_t i = 0; i < test.records.size(); ++i) {
        places_p.push_back(preds[i].places);
        places_t.push_back(test.records[i].targets.places);
        trans_p.push_back(preds[i].transient);
        trans_t.push_back(test.records[i].targets.transient);
    }
    const size_t k5 = std::min<size_t>(5, test.dims.places);
    std::cout << model_name << ",top1," << topk_accuracy(places_p, places_t, 1) << '\n';
    std::cout << model_name << ",top5," << topk_accuracy(places_p, places_t, k5) << '\n';
    std::cout << model_name << ",within0.1," << within_threshold(trans_p, trans_t, 0.1) << '\n';
    std::cout << model_name << ",within0.2," << within_threshold(trans_p, trans_t, 0.2) << '\n';
}

int run(int argc, char** argv) {
    CLI::App app{"dynamic visual appearance map"};
    app.require_subcommand(1);
    std::cout.precision(10);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_out, synth_dims = "16,10,6";
    size_t synth_samples = 1000, synth_cells = 60;
    uint64_t synth_seed = 0;
    double synth_noise = 0.0;
    synth_cmd->add_option("--out", synth_out)->required();
    synth_cmd->add_option("--samples", synth_samples)->required();
    synth_cmd->add_option("--seed", synth_seed)->required();
    synth_cmd->add_option("--dims", synth_dims);
    synth_cmd->add_option("--cells", synth_cells);
    synth_cmd->add_option("--noise", synth_noise);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model");
    std::string train_data, train_out, train_contexts = "sat,time,loc";
    Hyperparams hp;
    train_cmd->add_option("--data", train_data)->required();
    train_cmd->add_option("--out", train_out)->required();
    train_cmd->add_option("--contexts", train_contexts);
    train_cmd->add_option("--lr", hp.lr);
    train_cmd->add_option("--batch", hp.batch);
    train_cmd->add_option("--epochs", hp.epochs);
    train_cmd->add_option("--l2", hp.l2);
    train_cmd->add_option("--seed", hp.seed);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    std::string eval_data, eval_ckpt;
    eval_cmd->add_option("--data", eval_data)->required();
    eval_cmd->add_option("--ckpt", eval_ckpt)->required();

    // knn
    auto* knn_cmd = app.add_subcommand("knn", "k-NN baseline with grid-searched time scales");
    std::string knn_train, knn_test, knn_features = "time,loc", knn_grid = "0.1,0.3,1,3,10,30,100";
    size_t knn_k = 30;
    knn_cmd->add_option("--train", knn_train)->required();
    knn_cmd->add_option("--test", knn_test)->required();
    knn_cmd->add_option("--k", knn_k);
    knn_cmd->add_option("--features", knn_features);
    knn_cmd->add_option("--grid", knn_grid);

    // localize
    auto* loc_cmd = app.add_subcommand("localize", "rank candidate locations per query");
    std::string loc_ckpt, loc_queries, loc_candidates, loc_topk = "1,5";
    double loc_lambda = 0.58;
    loc_cmd->add_option("--ckpt", loc_ckpt)->required();
    loc_cmd->add_option("--queries", loc_queries)->required();
    loc_cmd->add_option("--candidates", loc_candidates)->required();
    loc_cmd->add_option("--lambda", loc_lambda);
    loc_cmd->add_option("--topk-percents", loc_topk);

    // verify
    auto* ver_cmd = app.add_subcommand("verify", "rank capture times per query");
    std::string ver_ckpt, ver_queries, ver_heatmap_dir;
    double ver_lambda = 0.58;
    ver_cmd->add_option("--ckpt", ver_ckpt)->required();
    ver_cmd->add_option("--queries", ver_queries)->required();
    ver_cmd->add_option("--lambda", ver_lambda);
    ver_cmd->add_option("--heatmap-dir", ver_heatmap_dir);

    // retrieve
    auto* ret_cmd = app.add_subcommand("retrieve", "retrieve likely gallery records");
    std::string ret_ckpt, ret_gallery, ret_overhead_from;
    double ret_lat = 0.0, ret_lon = 0.0;
    int ret_month = 1, ret_hour = 0;
    size_t ret_n = 10;
    ret_cmd->add_option("--ckpt", ret_ckpt)->required();
    ret_cmd->add_option("--gallery", ret_gallery)->required();
    ret_cmd->add_option("--lat", ret_lat)->required();
    ret_cmd->add_option("--lon", ret_lon)->required();
    ret_cmd->add_option("--month", ret_month)->required();
    ret_cmd->add_option("--hour", ret_hour)->required();
    ret_cmd->add_option("--overhead-from", ret_overhead_from)->required();
    ret_cmd->add_option("--n", ret_n);

    // map
    auto* map_cmd = app.add_subcommand("map", "render an attribute map over cells");
    std::string map_ckpt, map_cells, map_attr, map_csv, map_pgm;
    int map_month = 1, map_hour = 0;
    size_t map_pgm_width = 0;
    map_cmd->add_option("--ckpt", map_ckpt)->required();
    map_cmd->add_option("--cells", map_cells)->required();
    map_cmd->add_option("--month", map_month)->required();
    map_cmd->add_option("--hour", map_hour)->required();
    map_cmd->add_option("--attribute", map_attr)->required();
    map_cmd->add_option("--csv", map_csv)->required();
    map_cmd->add_option("--pgm", map_pgm);
    map_cmd->add_option("--pgm-width", map_pgm_width,
                        "raster width for --pgm; cells are row-major");

    CLI11_PARSE(app, argc, argv);

    if (synth_cmd->parsed()) {
        synth::WorldConfig wc;
        wc.dims = parse_dims(synth_dims);
        wc.n_scene_cells = synth_cells;
        wc.noise_sigma = synth_noise;
        wc.seed = synth_seed;
        Dataset ds = synth::generate_world(wc, synth_samples);
        save_dataset(ds, synth_out);
        std::cerr << "wrote " << ds.records.size() << " records to " << synth_out << '\n';
    } else if (train_cmd->parsed()) {
        Dataset data = load_dataset(train_data);
        ModelConfig cfg;
        cfg.contexts = ContextSet::parse(train_contexts);
        cfg.dims = data.dims;
        cfg.hyper = hp;
        auto [model, report] = train(build_model(cfg), data);
        for (size_t e = 0; e < report.total_loss.size(); ++e) {
            std::cerr << "epoch " << e + 1 << " places " << report.places_loss[e] << " transient "
                      << report.transient_loss[e] << " total " << report.total_loss[e] << '\n';
        }
        save_checkpoint(model, train_out);
        std::cerr << "wrote checkpoint " << train_out << '\n';
    } else if (eval_cmd->parsed()) {
        Dataset data = load_dataset(eval_data);
        DynamicMapModel model = load_checkpoint(eval_ckpt, data.dims);
        std::vector<AttributePrediction> preds;
        preds.reserve(data.records.size());
        for (const auto& r : data.records) preds.push_back(predict_record(model, r));
        print_metrics(model.config.contexts.to_string(), data, preds);
    } else if (knn_cmd->parsed()) {
        Dataset train_set = load_dataset(knn_train);
        Dataset test_set = load_dataset(knn_test);
        KnnConfig cfg;
        cfg.k = knn_k;
        cfg.use_time = knn_features.find("time") != std::string::npos;
        cfg.use_loc = knn_features.find("loc") != std::string::npos;
        std::string name = "knn";
        if (cfg.use_time) {
            // grid-search scales on a held-out fifth of the training set
            auto [gs_train, gs_val] = split_dataset(train_set, 0.2, 0);
            auto [sm, sh] = grid_search_time_scale(gs_train, gs_val, parse_double_list(knn_grid), cfg);
            cfg.month_scale = sm;
            cfg.hour_scale = sh;
            std::cerr << "grid-searched scales: month " << sm << " hour " << sh << '\n';
        }
        std::vector<AttributePrediction> preds;
        preds.reserve(test_set.records.size());
        for (const auto& r : test_set.records) preds.push_back(knn_predict(train_set, r, cfg));
        print_metrics(name, test_set, preds);
        auto prior = prior_baseline(train_set);
        std::vector<AttributePrediction> prior_preds(test_set.records.size(), prior);
        print_metrics("prior", test_set, prior_preds);
    } else if (loc_cmd->parsed()) {
        Dataset queries = load_dataset(loc_queries);
        Dataset cand_set = load_dataset(loc_candidates);
        DynamicMapModel model = load_checkpoint(loc_ckpt);
        std::vector<CandidateCell> candidates;
        for (const auto& r : cand_set.records) candidates.push_back({r.location, r.overhead});
        std::vector<double> percents = parse_double_list(loc_topk);
        std::vector<size_t> hit_counts(percents.size(), 0);
        size_t with_truth = 0;
        for (const auto& q : queries.records) {
            auto res = localize(q.targets, q.time, candidates, model, {loc_lambda});
            // the true candidate is the one carrying the query's id
            size_t truth = cand_set.records.size();
            for (size_t i = 0; i < cand_set.records.size(); ++i)
                if (cand_set.records[i].id == q.id) truth = i;
            if (truth == cand_set.records.size()) continue;
            ++with_truth;
            size_t rank = 0;
            for (size_t r = 0; r < res.ranking.size(); ++r)
                if (res.ranking[r] == truth) rank = r;
            std::cout << "query," << q.id << ",rank," << rank << '\n';
            for (size_t pi = 0; pi < percents.size(); ++pi)
                if (topk_percent_hit(rank, candidates.size(), percents[pi])) ++hit_counts[pi];
        }
        for (size_t pi = 0; pi < percents.size(); ++pi) {
            const double frac = with_truth ? static_cast<double>(hit_counts[pi]) / with_truth : 0.0;
            std::cout << "localize,top" << percents[pi] << "%," << frac << '\n';
        }
    } else if (ver_cmd->parsed()) {
        Dataset queries = load_dataset(ver_queries);
        DynamicMapModel model = load_checkpoint(ver_ckpt);
        size_t top1 = 0, top5 = 0;
        for (const auto& q : queries.records) {
            VerificationGrid grid =
                verify_time(q.targets, q.location, q.overhead, model, {ver_lambda}, q.time);
            std::cout << "query," << q.id << ",rank," << grid.rank_of_truth << '\n';
            if (topk_percent_hit(grid.rank_of_truth, 288, 1.0)) ++top1;
            if (topk_percent_hit(grid.rank_of_truth, 288, 5.0)) ++top5;
            if (!ver_heatmap_dir.empty()) {
                std::filesystem::create_directories(ver_heatmap_dir);
                const auto base = std::filesystem::path(ver_heatmap_dir) / q.id;
                write_time_grid_csv(grid.distances, base.string() + ".csv");
                write_pgm(grid.distances, 24, 12, base.string() + ".pgm");
            }
        }
        const double n = static_cast<double>(queries.records.size());
        std::cout << "verify,top1%," << (n ? top1 / n : 0.0) << '\n';
        std::cout << "verify,top5%," << (n ? top5 / n : 0.0) << '\n';
    } else if (ret_cmd->parsed()) {
        Dataset gallery = load_dataset(ret_gallery);
        DynamicMapModel model = load_checkpoint(ret_ckpt);
        OverheadFeature overhead;
        bool found = false;
        for (const auto& r : gallery.records) {
            if (r.id == ret_overhead_from) {
                overhead = r.overhead;
                found = true;
                break;
            }
        }
        if (!found) {
            std::ifstream in(ret_overhead_from);
            if (!in) throw IoError("--overhead-from is neither a gallery id nor a readable file");
            nlohmann::json j;
            in >> j;
            overhead.values = j.get<std::vector<double>>();
        }
        auto ids = retrieve(overhead, {ret_lat, ret_lon}, {ret_month, ret_hour}, gallery, model,
                            {0.58}, ret_n);
        for (const auto& id : ids) std::cout << id << '\n';
    } else if (map_cmd->parsed()) {
        Dataset cell_set = load_dataset(map_cells);
        DynamicMapModel model = load_checkpoint(map_ckpt);
        MapGridRequest req;
        for (const auto& r : cell_set.records) req.cells.push_back({r.location, r.overhead});
        req.time = {map_month, map_hour};
        req.attribute = parse_attribute(map_attr);
        auto values = render_attribute_map(req, model);
        write_map_csv(req, values, map_csv);
        if (!map_pgm.empty()) {
            size_t width = map_pgm_width ? map_pgm_width : values.size();
            if (values.size() % width != 0) {
                throw ValidationError("--pgm-width must divide the number of cells");
            }
            write_pgm(values, width, values.size() / width, map_pgm);
        }
        std::cerr << "wrote " << values.size() << " cells to " << map_csv << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
