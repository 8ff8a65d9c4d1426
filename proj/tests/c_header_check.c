/* Compile-only check that the public header is valid C. */
#include "uhlmann/uhlmann.h"

int uhl_c_header_check(void) {
  uhl_options options;
  uhl_options_init(&options);
  return options.method == UHL_METHOD_SPECTRAL ? 0 : 1;
}
