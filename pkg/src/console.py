from colorama import init
from pyfiglet import Figlet
from termcolor import colored
from tqdm import tqdm

RULE = "============================================================================"


def print_message(message, color="white"):
    """
    Print a message in the given color.

    Args:
    message (str): The message to print.
    color (str, optional): The color of the message. Defaults to "white".
    """
    print(colored(message, color))


def show_progress(iterable, desc=None, total=None, disable=False):
    """
    Display a progress bar for the given iterable.

    Args:
    iterable (iter): The iterable to display the progress for.
    desc (str, optional): The description of the progress. Defaults to None.
    total (int, optional): Length hint for generators.
    disable (bool, optional): Suppress the bar (``--quiet``).

    Returns:
    iter: The tqdm iterator.
    """
    return tqdm(iterable, desc=desc, total=total, disable=disable, dynamic_ncols=True,
                bar_format='{l_bar}{bar}| {n_fmt}/{total_fmt}')


def print_banner(subtitle):
    init()  # initialize colorama
    figlet = Figlet(font='slant')
    print(colored(RULE, "green"))
    print(colored(figlet.renderText('gpicert'), "cyan"))
    print(colored(RULE, "green"))
    print(colored(f"\n{subtitle}\n", "yellow", attrs=['bold']))
