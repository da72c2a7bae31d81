/* Measurement runtime interface linked into every wrapper library.
 *
 * Regions are dense integer handles; registering the same
 * (name, file, line) triple again returns the same id.  enter/exit
 * record one timestamped event pair per dynamic call.  The aggregated
 * call-tree profile is written at normal process exit (or on an
 * explicit flush) as UTF-8 JSON:
 *
 *   {
 *     "regions":  [{"id":0,"name":"f","file":"f.h","line":3}, ...],
 *     "calltree": {"region":-1,"count":0,"incl_ns":0,"excl_ns":0,
 *                  "children":[...nodes of the same shape...]}
 *   }
 *
 * Environment:
 *   LIBWRAP_PROFILE_OUT  output path; "%p" expands to the pid
 *                        (default: libwrap_profile.<pid>.json)
 *   LIBWRAP_VERBOSE      when set, banner lines on standard error
 */

#ifndef LIBWRAP_MONITOR_H
#define LIBWRAP_MONITOR_H

#ifdef __cplusplus
extern "C" {
#endif

int libwrap_region_register(const char *name, const char *file, int line);
void libwrap_enter(int id);
void libwrap_exit(int id);
void libwrap_flush(void);

#ifdef __cplusplus
}
#endif

#endif /* LIBWRAP_MONITOR_H */
