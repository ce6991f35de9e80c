from django.urls import path
from . import views

app_name = 'services'

urlpatterns = [
    path('observations', views.observations, name='observations'),
    path('query', views.query, name='query'),
    path('sensors', views.sensors, name='sensors'),
    path('rulepacks', views.rulepacks, name='rulepacks'),
    path('rulepacks/<str:pack_id>', views.rulepack_detail, name='rulepack_detail'),
    path('packs', views.packs, name='packs'),
    path('packs/<str:pack_id>', views.pack_detail, name='pack_detail'),
    path('subscriptions', views.subscriptions, name='subscriptions'),
    path('compositions', views.compositions, name='compositions'),
    path('stats', views.stats, name='stats'),
]
