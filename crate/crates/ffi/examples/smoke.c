#include <stdio.h>
#include "fracmhd.h"
int main(void) {
  FracmhdSimulation *sim = NULL;
  if (fracmhd_simulation_new("n = 16\nt_end = 0.1\n", &sim) != FRACMHD_STATUS_OK) return 1;
  if (fracmhd_simulation_advance_output(sim) != FRACMHD_STATUS_OK) return 2;
  double t; size_t n; fracmhd_simulation_time(sim, &t); fracmhd_simulation_grid_size(sim, &n);
  double w[256];
  if (fracmhd_simulation_field(sim, FRACMHD_FIELD_VORTICITY, w, 256) != FRACMHD_STATUS_OK) return 3;
  printf("t=%g n=%zu w0=%g abi=%u\n", t, n, w[0], fracmhd_abi_version());
  FracmhdSimulation *bad = NULL;
  int st = fracmhd_simulation_new("bogus = 1", &bad);
  printf("status=%d err=%s\n", st, fracmhd_last_error());
  fracmhd_simulation_free(sim);
  return 0;
}
