from ptbounds.cli import app

app(prog_name="ptbounds")
