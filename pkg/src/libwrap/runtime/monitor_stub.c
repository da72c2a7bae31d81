/* Count-only measurement runtime.
 *
 * Implements the full monitor interface but records no timing: call
 * trees carry exact counts and zero nanoseconds.  One global lock keeps
 * it correct (not fast) under threads.  The full runtime is a drop-in
 * replacement compiled from the same interface header.
 *
 * The exit flush is registered lazily on first use, so a dormant copy
 * of the runtime (e.g. in a passthrough wrapper library) never touches
 * the profile file.
 */

#include <pthread.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <unistd.h>

#include "libwrap_monitor.h"

struct region {
    char *name;
    char *file;
    int line;
};

struct node {
    int region;
    unsigned long long count;
    struct node *parent;
    struct node *children;
    struct node *next_sibling;
};

static pthread_mutex_t lw_lock = PTHREAD_MUTEX_INITIALIZER;
static struct region *lw_regions;
static int lw_region_count;
static int lw_region_capacity;
static struct node lw_root = { -1, 0, 0, 0, 0 };
static struct node *lw_cursor = &lw_root;
static int lw_active;

static void *lw_xalloc(size_t n) {
    void *p = calloc(1, n);
    if (p == 0) {
        fprintf(stderr, "libwrap: monitor allocation failed\n");
        abort();
    }
    return p;
}

static char *lw_strdup(const char *s) {
    size_t n = strlen(s) + 1;
    char *copy = lw_xalloc(n);
    memcpy(copy, s, n);
    return copy;
}

static void lw_write_profile(void);

static void lw_activate(void) {
    if (!lw_active) {
        lw_active = 1;
        atexit(lw_write_profile);
    }
}

int libwrap_region_register(const char *name, const char *file, int line) {
    int id;
    pthread_mutex_lock(&lw_lock);
    lw_activate();
    for (id = 0; id < lw_region_count; ++id) {
        if (lw_regions[id].line == line
            && strcmp(lw_regions[id].name, name) == 0
            && strcmp(lw_regions[id].file, file) == 0) {
            pthread_mutex_unlock(&lw_lock);
            return id;
        }
    }
    if (lw_region_count == lw_region_capacity) {
        int cap = lw_region_capacity ? lw_region_capacity * 2 : 64;
        struct region *grown = lw_xalloc((size_t)cap * sizeof *grown);
        memcpy(grown, lw_regions, (size_t)lw_region_count * sizeof *grown);
        free(lw_regions);
        lw_regions = grown;
        lw_region_capacity = cap;
    }
    id = lw_region_count++;
    lw_regions[id].name = lw_strdup(name);
    lw_regions[id].file = lw_strdup(file);
    lw_regions[id].line = line;
    pthread_mutex_unlock(&lw_lock);
    return id;
}

void libwrap_enter(int id) {
    struct node *child;
    pthread_mutex_lock(&lw_lock);
    lw_activate();
    for (child = lw_cursor->children; child != 0; child = child->next_sibling)
        if (child->region == id)
            break;
    if (child == 0) {
        child = lw_xalloc(sizeof *child);
        child->region = id;
        child->parent = lw_cursor;
        child->next_sibling = lw_cursor->children;
        lw_cursor->children = child;
    }
    child->count += 1;
    lw_cursor = child;
    pthread_mutex_unlock(&lw_lock);
}

static const char *lw_region_name(int id) {
    if (id >= 0 && id < lw_region_count)
        return lw_regions[id].name;
    return "<root>";
}

void libwrap_exit(int id) {
    pthread_mutex_lock(&lw_lock);
    if (lw_cursor->region != id) {
        fprintf(stderr,
                "libwrap: unbalanced exit: expected '%s' (region %d), "
                "got '%s' (region %d)\n",
                lw_region_name(lw_cursor->region), lw_cursor->region,
                lw_region_name(id), id);
        abort();
    }
    lw_cursor = lw_cursor->parent;
    pthread_mutex_unlock(&lw_lock);
}

static void lw_json_string(FILE *fh, const char *s) {
    fputc('"', fh);
    for (; *s; ++s) {
        unsigned char c = (unsigned char)*s;
        if (c == '"' || c == '\\')
            fprintf(fh, "\\%c", c);
        else if (c < 0x20)
            fprintf(fh, "\\u%04x", c);
        else
            fputc(c, fh);
    }
    fputc('"', fh);
}

static void lw_write_node(FILE *fh, const struct node *node) {
    const struct node *child;
    fprintf(fh, "{\"region\":%d,\"count\":%llu,\"incl_ns\":0,\"excl_ns\":0,"
            "\"children\":[", node->region, node->count);
    for (child = node->children; child != 0; child = child->next_sibling) {
        if (child != node->children)
            fputc(',', fh);
        lw_write_node(fh, child);
    }
    fputs("]}", fh);
}

static void lw_profile_path(char *buf, size_t size) {
    const char *env = getenv("LIBWRAP_PROFILE_OUT");
    if (env != 0 && env[0] != 0) {
        const char *pct = strstr(env, "%p");
        if (pct != 0) {
            snprintf(buf, size, "%.*s%ld%s", (int)(pct - env), env,
                     (long)getpid(), pct + 2);
        } else {
            snprintf(buf, size, "%s", env);
        }
    } else {
        snprintf(buf, size, "libwrap_profile.%ld.json", (long)getpid());
    }
}

static void lw_write_profile(void) {
    char path[4096];
    FILE *fh;
    int id;
    pthread_mutex_lock(&lw_lock);
    lw_profile_path(path, sizeof path);
    fh = fopen(path, "w");
    if (fh == 0) {
        /* Measurement must never change the application's exit status. */
        fprintf(stderr, "libwrap: cannot write profile to %s\n", path);
        pthread_mutex_unlock(&lw_lock);
        return;
    }
    fputs("{\"regions\":[", fh);
    for (id = 0; id < lw_region_count; ++id) {
        if (id)
            fputc(',', fh);
        fprintf(fh, "{\"id\":%d,\"name\":", id);
        lw_json_string(fh, lw_regions[id].name);
        fputs(",\"file\":", fh);
        lw_json_string(fh, lw_regions[id].file);
        fprintf(fh, ",\"line\":%d}", lw_regions[id].line);
    }
    fputs("],\"calltree\":", fh);
    lw_write_node(fh, &lw_root);
    fputs("}\n", fh);
    fclose(fh);
    if (getenv("LIBWRAP_VERBOSE") != 0)
        fprintf(stderr, "libwrap: profile written to %s\n", path);
    pthread_mutex_unlock(&lw_lock);
}

void libwrap_flush(void) {
    pthread_mutex_lock(&lw_lock);
    lw_activate();
    pthread_mutex_unlock(&lw_lock);
    lw_write_profile();
}
