// A single-node store: buffer ten logs with k=4, lose the buffer, and let the
// next query repair the batch tier.

#include <iostream>

#include "auditchain/auditchain.hpp"

using namespace auditchain;

int main() {
  LocalBackend backend;
  EngineConfig cfg;
  cfg.buffer_size = 4;
  QueryEngine<LocalBackend> writer(backend, cfg);
  writer.ensureLayout();
  for (std::uint64_t i = 1; i <= 10; ++i) {
    writer.ingest(LogRecord{1522257730000 + i, 3, 100 + i, 40345, 7, "read", "TOPMed"});
  }
  std::cout << "buffered before crash: " << writer.buffered() << '\n';
  writer.dropBuffer();
  backend.seal();

  QueryEngine<LocalBackend> reader(backend, cfg);
  const Query q{{{Field::user, std::uint64_t{7}}}, std::nullopt, std::nullopt};
  auto first = reader.execute(q);
  auto second = reader.execute(q);
  std::cout << "first query: " << first.logs.size() << " logs, gap " << first.recoveries.at(0).gap << ", "
            << first.stats.repaired_records << " repaired\n";
  std::cout << "second query: " << second.logs.size() << " logs, " << second.stats.repaired_records
            << " repaired\n";
  return first.logs.size() == 10 && second.recoveries.empty() ? 0 : 1;
}
