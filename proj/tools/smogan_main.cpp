#include <string>
#include <vector>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "smogan/cli.hpp"

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Training allocates many short-lived ~100 KB temporaries; keep them off mmap.
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
  return smogan::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
