// Placeholder: populated with the pinned acceptance criteria after the
// desk-scale calibration pass.
#include <cstdio>

int main() {
  std::puts("acceptance suite not yet wired");
  return 1;
}
