#include <math.h>
#include <stdio.h>
#include "quadric_ffi.h"

#define CHECK(cond)                                                    \
  do {                                                                 \
    if (!(cond)) {                                                     \
      const char *msg = quadric_last_error();                          \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,           \
              msg ? msg : "no message");                               \
      return 1;                                                        \
    }                                                                  \
  } while (0)

int main(void) {
  const double axis[3] = {0.0, 0.0, 1.0};
  QuadricModel *model = NULL;
  CHECK(quadric_model_from_canonical(QUADRIC_KIND_HYPERBOLOID_SHEET, 1.0, 1.5,
                                     axis, 3, &model) == QUADRIC_STATUS_OK);

  double points[3 * 64];
  CHECK(quadric_model_sample_surface(model, 64, 11, points, 3 * 64) ==
        QUADRIC_STATUS_OK);

  QuadricFit *fit = NULL;
  CHECK(quadric_fit_points(points, 64, 3, 0, &fit) == QUADRIC_STATUS_OK);
  QuadricFitSummary summary;
  CHECK(quadric_fit_summary(fit, &summary) == QUADRIC_STATUS_OK);
  CHECK(summary.kind == QUADRIC_KIND_HYPERBOLOID_SHEET);
  CHECK(fabs(summary.c2 - (1.0 - 1.25)) < 1e-9);

  QuadricReport report;
  CHECK(quadric_fit_verify(fit, &report) == QUADRIC_STATUS_OK);
  CHECK(report.worst < 1e-9);

  CHECK(quadric_model_from_canonical(42, 1.0, 1.5, axis, 3, &model) ==
        QUADRIC_STATUS_INVALID_ARGUMENT);
  CHECK(quadric_last_error() != NULL);

  quadric_fit_free(fit);
  quadric_model_free(model);
  printf("ok %s\n", quadric_version());
  return 0;
}
