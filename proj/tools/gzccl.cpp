// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "gzccl/gzccl.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Simulated compression-accelerated collectives"};
  app.require_subcommand(1);

  gzccl::BenchConfig bench;
  auto* b = app.add_subcommand("bench", "run one collective and write a report");
  b->add_option("--algo", bench.algorithm, "algorithm id (ring-allreduce, rd-allreduce, ...)");
  b->add_option("--ranks", bench.ranks, "simulated rank count")->check(CLI::PositiveNumber);
  b->add_option("--elements", bench.elements, "elements per rank");
  b->add_option("--eb", bench.eb, "absolute error bound")->check(CLI::PositiveNumber);
  b->add_option("--codec", bench.codec, "ebz | fixed-rate | none");
  b->add_option("--bits", bench.bits, "fixed-rate bits per value")->check(CLI::Range(1, 16));
  b->add_option("--seed", bench.seed, "data seed");
  b->add_option("--data", bench.data, "uniform | ramp | file:PATH");
  b->add_option("--cost-config", bench.cost_config, "cost parameter JSON (else $GZCCL_COST_CONFIG)");
  b->add_flag("--overlap,!--no-overlap", bench.overlap, "overlap compute and communication");
  b->add_flag("--staging,!--no-staging", bench.staging, "stage messages through the host");
  b->add_flag("--multi-stream,!--no-multi-stream", bench.multi_stream, "batch kernels across streams");
  b->add_option("--size-scale", bench.size_scale, "byte multiplier seen by the cost model")
      ->check(CLI::PositiveNumber);
  b->add_option("--root", bench.root, "root rank for scatter");
  b->add_option("--out", bench.out, "report path (default stdout)");
  b->add_option("--format", bench.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

  double min_bytes = 1 << 20, max_bytes = 64.0 * (1 << 20);
  int points = 7;
  std::string char_out, char_cost;
  bool no_measure = false;
  auto* c = app.add_subcommand("characterize", "model vs measured codec time across sizes");
  c->add_option("--min-bytes", min_bytes)->check(CLI::PositiveNumber);
  c->add_option("--max-bytes", max_bytes)->check(CLI::PositiveNumber);
  c->add_option("--points", points);
  c->add_option("--cost-config", char_cost);
  c->add_option("--out", char_out, "CSV path (default stdout)");
  c->add_flag("--no-measure", no_measure, "skip wall-clock measurement");

  gzccl::StackConfig stack;
  auto* s = app.add_subcommand("stack", "image stacking demo (Allreduce sum of N images)");
  s->add_option("--images", stack.images);
  s->add_option("--width", stack.width);
  s->add_option("--height", stack.height);
  s->add_option("--eb", stack.eb)->check(CLI::PositiveNumber);
  s->add_option("--algo", stack.algorithm);
  s->add_option("--seed", stack.seed);
  s->add_option("--cost-config", stack.cost_config);
  s->add_option("--out", stack.out, "stacked image, raw binary32");
  s->add_option("--report", stack.report, "JSON report path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*b) {
      gzccl::cmd_bench(bench);
    } else if (*c) {
      const auto rows = gzccl::characterize(min_bytes, max_bytes, points,
                                            gzccl::resolve_cost_params(char_cost), !no_measure);
      if (char_out.empty()) {
        gzccl::write_characterize_csv(rows, std::cout);
      } else {
        std::ofstream out(char_out);
        if (!out) throw std::runtime_error("cannot write " + char_out);
        gzccl::write_characterize_csv(rows, out);
      }
    } else if (*s) {
      const auto res = gzccl::cmd_stack(stack);
      if (stack.report.empty()) gzccl::write_report(res.report, "", "json");
    }
  } catch (const std::exception& e) {
    std::cerr << "gzccl: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
