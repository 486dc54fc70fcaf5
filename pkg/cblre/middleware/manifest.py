import logging

from ..utils.outputs import write_key_values, write_manifest


def manifest_middleware(handler):
    def middleware_handler(run):
        code = handler(run)
        if code == 0:
            summary = write_key_values(run.path('summary.txt'), run.summary)
            write_manifest(run.path('manifest.txt'), run.config_digest, run.seed,
                           run.settings.TOOL_VERSION, run.kind, run.outputs + [summary])
            logging.info("Wrote summary and manifest to %s", run.out_dir)
        return code
    return middleware_handler
