// deltapad: command-line front end for the diversification, Δdata and crash
// reporting pipeline.
//
// Exit codes: 0 success, 2 input error, 3 authentication failure,
// 4 corrupt patch.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "deltapad/collector.h"
#include "deltapad/corpus.h"
#include "deltapad/deltadata.h"
#include "deltapad/diversify.h"
#include "deltapad/error.h"
#include "deltapad/image.h"
#include "deltapad/metrics.h"
#include "deltapad/minidump.h"
#include "deltapad/opplog.h"
#include "deltapad/progmodel.h"
#include "deltapad/symfile.h"

namespace fs = std::filesystem;
using namespace deltapad;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitAuth = 3;
constexpr int kExitPatchCorrupt = 4;

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInput, "cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Bytes ReadBytes(const std::string& path) {
  const std::string s = ReadText(path);
  return Bytes(s.begin(), s.end());
}

void WriteFile(const fs::path& path, const void* data, size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw Error(ErrorKind::kInput, "cannot write " + path.string());
}
void WriteFile(const fs::path& path, const std::string& s) {
  WriteFile(path, s.data(), s.size());
}
void WriteFile(const fs::path& path, const Bytes& b) { WriteFile(path, b.data(), b.size()); }

fs::path PrepareDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kInput, "cannot create " + dir + ": " + ec.message());
  return fs::path(dir);
}

std::optional<Bytes> KeyFrom(const std::string& hex) {
  if (hex.empty()) return std::nullopt;
  return ParseKey(hex);
}

// Flags shared by build, diversify and metrics.
struct BuildFlags {
  bool no_default_padding = false;
  bool sp_fp_opt = false;
  std::string nop_prob = "1/5";
  double desync = 0.0;
  bool no_padding = false;
  bool no_nops = false;
  bool no_shuffle = false;

  void AddLayout(CLI::App* cmd) {
    cmd->add_flag("--no-default-padding", no_default_padding,
                  "Build the default image without the 8 bytes of stack padding");
    cmd->add_flag("--sp-fp-opt", sp_fp_opt,
                  "Let the backend pick SP- or FP-relative stack accesses by cost");
  }
  void AddSchemes(CLI::App* cmd) {
    cmd->add_option("--nop-prob", nop_prob, "NOP insertion probability NUM/DEN")
        ->capture_default_str();
    cmd->add_flag("--no-padding", no_padding, "Disable stack padding randomization");
    cmd->add_flag("--no-nops", no_nops, "Disable NOP insertion");
    cmd->add_flag("--no-shuffle", no_shuffle, "Disable function shuffling");
  }
  void AddDesync(CLI::App* cmd) {
    cmd->add_option("--desync", desync, "Fraction of functions given a phantom instruction")
        ->check(CLI::Range(0.0, 1.0));
  }

  BuildOptions Options() const {
    BuildOptions o;
    o.default_padding = !no_default_padding;
    o.layout.sp_fp_opt = sp_fp_opt;
    o.nop_probability = ParseNopProbability(nop_prob);
    o.schemes = Schemes{!no_padding, !no_nops, !no_shuffle};
    o.desync_rate = desync;
    return o;
  }
};

ProgramModel LoadModel(const std::string& path) {
  ProgramModel model = ParseModel(ReadText(path));
  ValidateModel(model);
  return model;
}

void WriteImage(const fs::path& path, const ProgramModel& model, const LayoutResult& layout) {
  WriteFile(path, SerializeImage(MakeImage(model, layout)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diversified builds with exact server-side symbol reconstruction"};
  app.require_subcommand(1);

  // gen
  uint64_t gen_seed = 0;
  size_t gen_n = 1;
  std::string gen_class = "small", gen_out;
  CLI::App* gen = app.add_subcommand("gen", "Generate a pseudo-random program corpus");
  gen->add_option("--seed", gen_seed, "Corpus seed")->required();
  gen->add_option("--n", gen_n, "Number of programs")->required()->check(CLI::PositiveNumber);
  gen->add_option("--class", gen_class, "small or medium")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  // build
  std::string build_model, build_out;
  BuildFlags build_flags;
  CLI::App* build = app.add_subcommand("build", "Default build: image, symbols, opportunity log");
  build->add_option("--model", build_model, "Program model file")->required();
  build->add_option("--out", build_out, "Output directory")->required();
  build_flags.AddLayout(build);

  // diversify
  std::string div_model, div_seeds, div_out;
  BuildFlags div_flags;
  CLI::App* div = app.add_subcommand("diversify", "Diversified build: image, symbols, decision log");
  div->add_option("--model", div_model, "Program model file")->required();
  div->add_option("--seeds", div_seeds, "Seed tuple P,N,F")->required();
  div->add_option("--out", div_out, "Output directory")->required();
  div_flags.AddLayout(div);
  div_flags.AddSchemes(div);
  div_flags.AddDesync(div);

  // delta
  std::string delta_default, delta_log, delta_div, delta_seeds, delta_out, delta_key,
      delta_embed;
  BuildFlags delta_flags;
  CLI::App* delta = app.add_subcommand("delta", "Replicate, diff and pack the Δdata");
  delta->add_option("--default-sym", delta_default, "Default symbol file")->required();
  delta->add_option("--opplog", delta_log, "Opportunity log")->required();
  delta->add_option("--div-sym", delta_div, "Diversified symbol file")->required();
  delta->add_option("--seeds", delta_seeds, "Seed tuple P,N,F")->required();
  delta->add_option("--out", delta_out, "Output .dbpd file")->required();
  delta->add_option("--key", delta_key, "Hex key for the authentication tag");
  delta->add_option("--embed", delta_embed, "Image file to append the Δdata section to");
  delta_flags.AddSchemes(delta);

  // crash
  std::string crash_image, crash_model, crash_chain, crash_out;
  CLI::App* crash = app.add_subcommand("crash", "Simulate a crash in an image");
  crash->add_option("--image", crash_image, "Image file")->required();
  crash->add_option("--model", crash_model, "Source program model")->required();
  crash->add_option("--chain", crash_chain, "fn:block:index,... outermost first")->required();
  crash->add_option("--out", crash_out, "Output dump file")->required();

  // report
  std::string rep_dump, rep_delta, rep_default, rep_log, rep_key;
  CLI::App* report = app.add_subcommand("report", "Symbolize a crash dump");
  report->add_option("--dump", rep_dump, "Dump file")->required();
  report->add_option("--delta", rep_delta, "Δdata file or image carrying it")->required();
  report->add_option("--default-sym", rep_default, "Default symbol file")->required();
  report->add_option("--opplog", rep_log, "Opportunity log")->required();
  report->add_option("--key", rep_key, "Hex key for the authentication tag");

  // metrics
  std::string met_corpus, met_seeds, met_out, met_key;
  bool met_timings = false;
  BuildFlags met_flags;
  CLI::App* metrics = app.add_subcommand("metrics", "Evaluate a corpus over seed tuples");
  metrics->add_option("--corpus", met_corpus, "Directory of .model files")->required();
  metrics->add_option("--seeds-file", met_seeds, "One P,N,F tuple per line")->required();
  metrics->add_option("--out", met_out, "Report file")->required();
  metrics->add_option("--key", met_key, "Hex key for the authentication tag");
  metrics->add_flag("--timings", met_timings, "Append wall-clock timings");
  met_flags.AddLayout(metrics);
  met_flags.AddDesync(metrics);
  metrics->add_option("--nop-prob", met_flags.nop_prob, "NOP insertion probability NUM/DEN")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*gen) {
      const fs::path dir = PrepareDir(gen_out);
      const auto corpus = GenerateCorpus(gen_seed, gen_n, ParseSizeClass(gen_class));
      for (const ProgramModel& m : corpus) WriteFile(dir / (m.module_name + ".model"), EmitModel(m));
      std::cout << "wrote " << corpus.size() << " models to " << dir.string() << "\n";
    } else if (*build) {
      const fs::path dir = PrepareDir(build_out);
      const DefaultBuild b = BuildDefault(LoadModel(build_model), build_flags.Options());
      WriteImage(dir / "image.dimg", b.model, b.layout);
      WriteFile(dir / "symbols.sym", EmitSymbolFile(b.layout.symfile));
      WriteFile(dir / "opportunity.log", EmitOpportunityLog(b.log));
    } else if (*div) {
      const fs::path dir = PrepareDir(div_out);
      const DiversifiedBuild d =
          BuildDiversified(LoadModel(div_model), ParseSeedTuple(div_seeds), div_flags.Options());
      WriteImage(dir / "image.dimg", d.model, d.layout);
      WriteFile(dir / "symbols.sym", EmitSymbolFile(d.layout.symfile));
      WriteFile(dir / "decision.log", EmitDecisionLog(d.log, d.model));
    } else if (*delta) {
      const BuildOptions o = delta_flags.Options();
      const ReplicationOptions ro{ParseSeedTuple(delta_seeds), o.nop_probability, o.schemes};
      const DeltaData dd =
          MakeDeltaData(ParseSymbolFile(ReadText(delta_default)),
                        ParseOpportunityLog(ReadText(delta_log)),
                        ParseSymbolFile(ReadText(delta_div)), ro);
      const Bytes packed = Pack(dd, KeyFrom(delta_key));
      WriteFile(delta_out, packed);
      if (!delta_embed.empty()) WriteFile(delta_embed, Embed(ReadBytes(delta_embed), packed));
      std::cout << "delta " << packed.size() << " bytes, patch payload "
                << dd.patch.payload_bytes() << " bytes, " << dd.patch.ops.size() << " ops\n";
    } else if (*crash) {
      const LoadedImage img = LoadImage(ParseImage(ReadBytes(crash_image)));
      const ProgramModel source = LoadModel(crash_model);
      if (source.ModuleId() != img.model.ModuleId()) {
        throw Error(ErrorKind::kModuleMismatch, "image was not built from " + crash_model);
      }
      const MinidumpLite dump = SimulateCrash(img.layout, img.model, ParseChain(crash_chain));
      WriteFile(crash_out, EmitMinidump(dump));
    } else if (*report) {
      Bytes dd = ReadBytes(rep_delta);
      if (dd.size() >= 4 && std::string(dd.begin(), dd.begin() + 4) == "DIMG") dd = Extract(dd);
      const StackTrace trace =
          Report(ParseMinidump(ReadText(rep_dump)), dd, ParseSymbolFile(ReadText(rep_default)),
                 ParseOpportunityLog(ReadText(rep_log)), KeyFrom(rep_key));
      std::cout << trace.ToString();
    } else if (*metrics) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(met_corpus)) {
        if (e.path().extension() == ".model") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      if (files.empty()) throw Error(ErrorKind::kInput, "no .model files in " + met_corpus);
      std::vector<ProgramModel> corpus;
      for (const fs::path& f : files) corpus.push_back(LoadModel(f.string()));
      MetricsOptions mo;
      mo.build = met_flags.Options();
      mo.key = KeyFrom(met_key);
      const CorpusMetrics m = ComputeMetrics(corpus, ParseSeedsFile(ReadText(met_seeds)), mo);
      WriteFile(met_out, m.ToString(met_timings));
    }
  } catch (const Error& e) {
    std::cerr << "deltapad: " << ErrorKindName(e.kind()) << " error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::kAuth: return kExitAuth;
      case ErrorKind::kPatchCorrupt: return kExitPatchCorrupt;
      default: return kExitInput;
    }
  } catch (const fs::filesystem_error& e) {
    std::cerr << "deltapad: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
