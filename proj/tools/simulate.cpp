// Command-line front end for the side-channel V2V session simulator.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "sidelink/acoustic.hpp"
#include "sidelink/error.hpp"
#include "sidelink/handshake.hpp"
#include "sidelink/pki.hpp"
#include "sidelink/scenario.hpp"
#include "sidelink/sim.hpp"
#include "sidelink/visual.hpp"

namespace fs = std::filesystem;
using namespace sidelink;

namespace {

struct RunArgs {
    std::string scenario_path;
    std::string trace_path;
    uint64_t seed = 0;
    bool seed_set = false;
};

int cmd_run(const RunArgs& args) {
    Scenario sc = Scenario::load(args.scenario_path);
    std::optional<uint64_t> seed;
    if (args.seed_set) seed = args.seed;
    RunResult result = run_scenario(sc, seed);
    if (!args.trace_path.empty()) {
        std::ofstream out(args.trace_path, std::ios::trunc);
        result.trace.write_jsonl(out);
    }
    std::cout << result.summary.dump(2) << '\n';
    std::cout << (result.expectation_met ? "OK" : "MISMATCH") << ": outcome " << result.outcome
              << ", expected " << sc.expect_outcome << '\n';
    return result.expectation_met ? 0 : 1;
}

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::vector<int> parse_ints(const std::string& csv) {
    std::vector<int> out;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

void write_or_print(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
    } else {
        std::ofstream out(path, std::ios::trunc);
        out << content;
    }
}

Scenario load_or_default(const std::string& path) {
    if (path.empty()) return Scenario{};
    return Scenario::load(path);
}

uint32_t parse_salt(const std::string& text) {
    return static_cast<uint32_t>(std::stoull(text, nullptr, 0));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Side-channel V2V session establishment simulator"};
    app.require_subcommand(1);

    // ---- run ----
    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run one scenario and emit its trace");
    run->add_option("scenario", run_args.scenario_path, "Scenario file")->required();
    run->add_option("--trace", run_args.trace_path, "Write JSON-lines trace here");
    auto* seed_opt = run->add_option("--seed", run_args.seed, "Override the scenario seed");

    // ---- ber ----
    std::string ber_channel = "both", ber_scenario, ber_out, ber_noise = "0,1,2,4",
                ber_jitter = "0";
    size_t ber_payloads = 20, ber_bits = 64;
    auto* ber = app.add_subcommand("ber", "Bit-error-rate table per channel configuration");
    ber->add_option("--channel", ber_channel, "acoustic|visual|both");
    ber->add_option("--scenario", ber_scenario, "Base scenario file (defaults used otherwise)");
    ber->add_option("--payloads", ber_payloads, "Payload count per configuration");
    ber->add_option("--bits", ber_bits, "Bits per payload");
    ber->add_option("--noise", ber_noise, "Visual pixel noise sigmas, comma separated");
    ber->add_option("--jitter", ber_jitter, "Acoustic edge jitter values, comma separated");
    ber->add_option("--out", ber_out, "Write CSV here (stdout otherwise)");

    // ---- attack-suite ----
    std::string attack_dir = "scenarios", attack_out;
    auto* attack = app.add_subcommand("attack-suite", "Run attack scenarios, verdict per row");
    attack->add_option("--dir", attack_dir, "Directory of scenario files");
    attack->add_option("--out", attack_out, "Write CSV here (stdout otherwise)");

    // ---- sweep ----
    std::string sweep_scenario, sweep_out, sweep_param, sweep_values;
    std::string sweep_exposures = "0.001,0.002,0.004,0.008,0.012,0.016,0.022,0.03";
    std::string sweep_lookaheads = "1,2,4", sweep_downsamples = "1,2";
    size_t sweep_bits = 48;
    auto* sweep = app.add_subcommand("sweep", "Configuration sweep over the visual decoder");
    sweep->add_option("--scenario", sweep_scenario, "Base scenario file");
    sweep->add_option("--bits", sweep_bits, "Payload bits for the sweep transmission");
    sweep->add_option("--exposures", sweep_exposures, "Exposure list, seconds");
    sweep->add_option("--lookaheads", sweep_lookaheads, "Lookahead list");
    sweep->add_option("--downsamples", sweep_downsamples, "Downsample ratio list");
    sweep->add_option("--param", sweep_param, "Single axis: exposure|lookahead|downsample");
    sweep->add_option("--values", sweep_values, "Values for --param");
    sweep->add_option("--out", sweep_out, "Write CSV here (stdout otherwise)");

    // ---- pki ----
    auto* pki = app.add_subcommand("pki", "Blockchain PKI store operations");
    pki->require_subcommand(1);
    std::string store = "chain.dat", plate, salt_text = "0", ca_name = "RootCA",
                accept = "RootCA", fee_text = "0.09";
    uint64_t pki_seed = 7;
    unsigned salt_bits = 32;
    int difficulty = 12, reveal_delay = 6;

    auto* pki_init = pki->add_subcommand("init", "Create an empty chain store");
    pki_init->add_option("--store", store, "Store file");
    pki_init->add_option("--difficulty", difficulty, "Initial difficulty bits");
    pki_init->add_option("--reveal-delay", reveal_delay, "Blocks between commit and reveal");

    auto* pki_register = pki->add_subcommand("register", "Commit-reveal insert one identity");
    pki_register->add_option("--store", store, "Store file");
    pki_register->add_option("--plate", plate, "License plate value")->required();
    pki_register->add_option("--salt", salt_text, "32-bit identity salt")->required();
    pki_register->add_option("--ca", ca_name, "Issuing certificate authority");
    pki_register->add_option("--seed", pki_seed, "Vehicle key seed");
    pki_register->add_option("--difficulty", difficulty, "Initial difficulty bits");
    pki_register->add_option("--reveal-delay", reveal_delay, "Blocks between commit and reveal");

    auto* pki_sync = pki->add_subcommand("sync", "Verify and filter a chain copy");
    pki_sync->add_option("--store", store, "Store file");
    pki_sync->add_option("--accept-ca", accept, "Accepted CAs, comma separated");

    auto* pki_lookup = pki->add_subcommand("lookup", "Resolve a plate+salt to its entry");
    pki_lookup->add_option("--store", store, "Store file");
    pki_lookup->add_option("--plate", plate, "License plate value")->required();
    pki_lookup->add_option("--salt", salt_text, "32-bit identity salt")->required();
    pki_lookup->add_option("--accept-ca", accept, "Accepted CAs, comma separated");

    auto* pki_verify = pki->add_subcommand("verify", "Structural chain verification");
    pki_verify->add_option("--store", store, "Store file");

    auto* pki_cost = pki->add_subcommand("attack-cost", "Brick-attack economics");
    pki_cost->add_option("--salt-bits", salt_bits, "Salt width in bits");
    pki_cost->add_option("--fee", fee_text, "Insertion fee in USD");

    // ---- acoustic ----
    auto* ac = app.add_subcommand("acoustic", "Offline envelope encode/decode");
    ac->require_subcommand(1);
    std::string ac_payload, ac_file;
    double ac_m = 0.02, ac_rate = 0.0, ac_angle = 0.0, ac_distance = 0.0;
    size_t ac_bits = 0;
    auto* ac_enc = ac->add_subcommand("encode", "Payload hex -> envelope CSV");
    ac_enc->add_option("--payload", ac_payload, "Payload bits as hex")->required();
    ac_enc->add_option("--m", ac_m, "Modulation period, seconds");
    ac_enc->add_option("--rate", ac_rate, "Sample rate (0 = auto)");
    ac_enc->add_option("--angle", ac_angle, "Receiver angle, degrees");
    ac_enc->add_option("--distance", ac_distance, "Distance, meters");
    ac_enc->add_option("--out", ac_file, "CSV path")->required();
    auto* ac_dec = ac->add_subcommand("decode", "Envelope CSV -> payload hex");
    ac_dec->add_option("--in", ac_file, "CSV path")->required();
    ac_dec->add_option("--m", ac_m, "Modulation period, seconds");
    ac_dec->add_option("--payload-bits", ac_bits, "Expected payload length")->required();

    // ---- visual ----
    auto* vis = app.add_subcommand("visual", "Offline capture render/decode");
    vis->require_subcommand(1);
    std::string vis_payload, vis_dir, vis_scenario;
    size_t vis_bits = 0;
    auto* vis_render = vis->add_subcommand("render", "Payload hex -> PGM capture directory");
    vis_render->add_option("--payload", vis_payload, "Payload bits as hex")->required();
    vis_render->add_option("--scenario", vis_scenario, "Camera settings source");
    vis_render->add_option("--out", vis_dir, "Capture directory")->required();
    auto* vis_decode = vis->add_subcommand("decode", "PGM capture directory -> payload hex");
    vis_decode->add_option("--in", vis_dir, "Capture directory")->required();
    vis_decode->add_option("--payload-bits", vis_bits, "Expected payload length")->required();
    vis_decode->add_option("--scenario", vis_scenario, "Camera settings source");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            run_args.seed_set = seed_opt->count() > 0;
            return cmd_run(run_args);
        }

        if (*ber) {
            Scenario sc = load_or_default(ber_scenario);
            std::vector<BerRow> rows;
            if (ber_channel == "acoustic" || ber_channel == "both") {
                auto r = measure_ber_acoustic(sc, ber_payloads, ber_bits,
                                              parse_doubles(ber_jitter));
                rows.insert(rows.end(), r.begin(), r.end());
            }
            if (ber_channel == "visual" || ber_channel == "both") {
                auto r = measure_ber_visual(sc, ber_payloads, ber_bits,
                                            parse_doubles(ber_noise));
                rows.insert(rows.end(), r.begin(), r.end());
            }
            std::ostringstream out;
            write_ber_csv(out, rows);
            write_or_print(ber_out, out.str());
            return 0;
        }

        if (*attack) {
            std::vector<Scenario> scenarios;
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(attack_dir)) {
                if (entry.path().extension() == ".toml") files.push_back(entry.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& file : files) scenarios.push_back(Scenario::load(file.string()));
            auto verdicts = attack_suite(scenarios);
            std::ostringstream out;
            write_verdict_table(out, verdicts);
            write_or_print(attack_out, out.str());
            bool all_pass = true;
            for (const auto& v : verdicts) all_pass = all_pass && v.pass;
            return all_pass ? 0 : 1;
        }

        if (*sweep) {
            Scenario sc = load_or_default(sweep_scenario);
            auto exposures = parse_doubles(sweep_exposures);
            auto lookaheads = parse_ints(sweep_lookaheads);
            auto downsamples = parse_ints(sweep_downsamples);
            if (!sweep_param.empty()) {
                if (sweep_param == "exposure") {
                    exposures = parse_doubles(sweep_values);
                } else if (sweep_param == "lookahead") {
                    lookaheads = parse_ints(sweep_values);
                } else if (sweep_param == "downsample") {
                    downsamples = parse_ints(sweep_values);
                } else {
                    fail(Errc::config_error, "--param must be exposure|lookahead|downsample");
                }
            }
            Rng rng(sc.seed);
            Rng payload_rng = rng.fork("sweep-payload");
            BitString payload = BitString::random(payload_rng, sweep_bits);
            auto rows = sweep_configurations(payload, sc.frames_per_slot, sc.camera, sc.geometry,
                                             sc.phase, sc.pose_noise, exposures, lookaheads,
                                             downsamples, sc.seed);
            std::ostringstream out;
            write_sweep_csv(out, rows);
            write_or_print(sweep_out, out.str());
            return 0;
        }

        if (*pki) {
            ChainParams params;
            params.initial_difficulty_bits = static_cast<uint32_t>(difficulty);
            params.reveal_delay = static_cast<uint32_t>(reveal_delay);
            if (*pki_init) {
                Chain chain(params);
                chain.save(store);
                std::cout << "initialized empty chain store " << store << '\n';
                return 0;
            }
            if (*pki_register) {
                Chain chain = fs::exists(store) ? Chain::load(store) : Chain(params);
                PkiNode node(std::move(chain), FeeSchedule::from_usd(fee_text));

                uint32_t salt = parse_salt(salt_text);
                crypto::Bytes32 prim = compute_primary_key(plate, salt);
                Dht existing = filtered_sync(node.chain(), {ca_name});
                if (existing.find(prim)) {
                    fail(Errc::collision, "primary key already registered on this chain");
                }
                CertificateAuthority ca = CertificateAuthority::from_name(ca_name);
                Rng rng(pki_seed);
                VehicleIdentity id = VehicleIdentity::create(plate, salt, rng, ca);
                node.register_entry(id.dht_entry(), 0.0);
                node.chain().save(store);
                std::cout << "registered " << plate << " salt " << salt_text << " prim "
                          << hex_encode(prim) << "\nchain height " << node.chain().height()
                          << ", fee paid " << node.fees().fee_usd() << " USD\n";
                return 0;
            }
            if (*pki_sync || *pki_lookup) {
                Chain chain = Chain::load(store);
                std::set<std::string> accepted_set;
                std::istringstream in(accept);
                std::string item;
                while (std::getline(in, item, ',')) accepted_set.insert(item);
                Dht dht = filtered_sync(chain, accepted_set);
                if (*pki_sync) {
                    std::cout << "verified chain of " << chain.height() << " blocks, "
                              << dht.entries.size() << " entries accepted, "
                              << dht.dropped.size() << " dropped\n";
                    for (const auto& [prim, entry] : dht.entries) {
                        std::cout << hex_encode(prim) << " issuer " << entry.certificate.issuer
                                  << '\n';
                    }
                    for (const auto& d : dht.dropped) {
                        std::cout << "dropped: " << d.reason << '\n';
                    }
                    return 0;
                }
                crypto::Bytes32 prim = compute_primary_key(plate, parse_salt(salt_text));
                DhtEntry entry = dht.lookup(prim);
                CaDirectory dir;
                for (const auto& name : accepted_set) {
                    dir[name] = CertificateAuthority::from_name(name).verify_key();
                }
                std::cout << "primary key " << hex_encode(prim) << "\npublic key  "
                          << hex_encode(entry.public_key) << "\nissuer      "
                          << entry.certificate.issuer << "\ncertificate "
                          << (verify_certificate(entry.certificate, dir) ? "valid" : "INVALID")
                          << '\n';
                return 0;
            }
            if (*pki_verify) {
                Chain chain = Chain::load(store);
                chain.verify();
                std::cout << "chain of " << chain.height() << " blocks verifies\n";
                return 0;
            }
            if (*pki_cost) {
                FeeSchedule fees = FeeSchedule::from_usd(fee_text);
                std::cout << brick_attack_cost(salt_bits, fees) << " USD\n";
                return 0;
            }
        }

        if (*ac) {
            TransducerConfig cfg;
            cfg.modulation_period = ac_m;
            cfg.sample_rate = ac_rate;
            cfg.angle_deg = ac_angle;
            cfg.distance_m = ac_distance;
            if (*ac_enc) {
                Rng rng(1);
                EnvelopeTrace trace =
                    acoustic_send_payload(BitString::from_hex(ac_payload), cfg, rng);
                std::ofstream out(ac_file, std::ios::trunc);
                write_envelope_csv(out, trace);
                std::cout << "wrote " << trace.samples.size() << " samples ("
                          << trace.duration() << " s) to " << ac_file << '\n';
                return 0;
            }
            std::ifstream in(ac_file);
            if (!in) fail(Errc::config_error, "cannot open " + ac_file);
            EnvelopeTrace trace = read_envelope_csv(in);
            BitString payload = acoustic_receive_payload(trace, ac_m, ac_bits);
            std::cout << payload.to_hex() << '\n';
            return 0;
        }

        if (*vis) {
            Scenario sc = load_or_default(vis_scenario);
            if (*vis_render) {
                Rng rng(sc.seed);
                Capture cap = visual_send_payload(BitString::from_hex(vis_payload),
                                                  sc.frames_per_slot, sc.camera, sc.geometry,
                                                  sc.phase, rng);
                write_capture_dir(vis_dir, cap);
                std::cout << "wrote " << cap.frames.size() << " frames to " << vis_dir << '\n';
                return 0;
            }
            Capture cap = read_capture_dir(vis_dir);
            Rng rng(sc.seed);
            BitString payload =
                visual_receive_payload(cap, sc.geometry, sc.pose_noise, vis_bits, rng);
            std::cout << payload.to_hex() << '\n';
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
